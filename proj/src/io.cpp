#include "anosov/io.hpp"

#include <openssl/evp.h>
#include <toml.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace anosov::io {

namespace fs = std::filesystem;
using nlohmann::json;

Error io_error(std::string code, const std::string& msg) { return Error(ErrorKind::io, std::move(code), msg); }

double ModelConfig::tolerance(const std::string& key, double fallback) const {
  const auto it = tolerances.find(key);
  return it == tolerances.end() ? fallback : it->second;
}

namespace {

Error bad(const std::string& where, const std::string& msg) { return validation_error("config", where + ": " + msg); }

void only_keys(const toml::table& t, const std::string& where, std::initializer_list<std::string_view> allowed) {
  for (const auto& [k, v] : t) {
    (void)v;
    bool ok = false;
    for (auto a : allowed) ok = ok || (k.str() == a);
    if (!ok) throw bad(where, "unknown key '" + std::string(k.str()) + "'");
  }
}

double number(const toml::node* n, const std::string& where) {
  if (!n) throw bad(where, "missing");
  if (auto v = n->value<double>(); v && (n->is_floating_point() || n->is_integer())) return *v;
  throw bad(where, "expected a number");
}

double number_or(const toml::table& t, std::string_view key, double fallback, const std::string& where) {
  const toml::node* n = t.get(key);
  return n ? number(n, where + "." + std::string(key)) : fallback;
}

int integer(const toml::node* n, const std::string& where) {
  if (!n || !n->is_integer()) throw bad(where, "expected an integer");
  return int(*n->value<std::int64_t>());
}

const toml::table& table_at(const toml::node* n, const std::string& where) {
  if (!n || !n->is_table()) throw bad(where, "expected a table");
  return *n->as_table();
}

TrigPoly trig_poly(const toml::table& t, const std::string& where, bool allow_constant) {
  if (allow_constant) only_keys(t, where, {"constant", "terms"});
  else only_keys(t, where, {"terms", "z_lo", "z_hi"});
  TrigPoly p;
  if (allow_constant) p.constant = number(t.get("constant"), where + ".constant");
  if (const toml::node* terms = t.get("terms")) {
    if (!terms->is_array()) throw bad(where + ".terms", "expected an array of tables");
    int i = 0;
    for (const toml::node& e : *terms->as_array()) {
      const std::string w = where + ".terms[" + std::to_string(i++) + "]";
      const toml::table& tt = table_at(&e, w);
      only_keys(tt, w, {"kx", "ky", "c", "s"});
      TrigTerm term;
      term.kx = integer(tt.get("kx"), w + ".kx");
      term.ky = integer(tt.get("ky"), w + ".ky");
      term.c = number_or(tt, "c", 0.0, w);
      term.s = number_or(tt, "s", 0.0, w);
      p.terms.push_back(term);
    }
  }
  return p;
}

Mat2i base_matrix(const toml::node* n) {
  const std::string w = "model.base";
  if (!n || !n->is_array() || n->as_array()->size() != 2) throw bad(w, "expected [[a, b], [c, d]]");
  Mat2i A;
  for (int i = 0; i < 2; ++i) {
    const toml::node& row = *n->as_array()->get(i);
    if (!row.is_array() || row.as_array()->size() != 2) throw bad(w, "expected [[a, b], [c, d]]");
    for (int j = 0; j < 2; ++j) A(i, j) = integer(row.as_array()->get(j), w);
  }
  return A;
}

}  // namespace

ModelConfig parse_model(const std::string& text, const std::string& origin) {
  toml::table root;
  try {
    root = toml::parse(text, origin);
  } catch (const toml::parse_error& e) {
    std::ostringstream s;
    s << origin << ":" << e.source().begin.line << ": " << e.description();
    throw io_error("config_unreadable", s.str());
  }
  only_keys(root, "config", {"model", "tolerances", "run"});
  ModelConfig c;
  c.path = origin;
  c.text = text;

  const toml::table& mt = table_at(root.get("model"), "model");
  only_keys(mt, "model", {"base", "roof", "timechange", "fiber_panels", "support_margin"});
  ModelOptions opts;
  if (mt.get("fiber_panels")) opts.fiber_panels = integer(mt.get("fiber_panels"), "model.fiber_panels");
  opts.support_margin = number_or(mt, "support_margin", opts.support_margin, "model");
  const Mat2i base = base_matrix(mt.get("base"));
  const TrigPoly roof = trig_poly(table_at(mt.get("roof"), "model.roof"), "model.roof", true);
  std::vector<TermPtr> tc;
  if (const toml::node* n = mt.get("timechange")) {
    if (!n->is_array()) throw bad("model.timechange", "expected an array of tables");
    int i = 0;
    for (const toml::node& e : *n->as_array()) {
      const std::string w = "model.timechange[" + std::to_string(i++) + "]";
      const toml::table& t = table_at(&e, w);
      TrigPoly modes = trig_poly(t, w, false);
      tc.push_back(std::make_shared<TrigProfileTerm>(std::move(modes), number(t.get("z_lo"), w + ".z_lo"),
                                                     number(t.get("z_hi"), w + ".z_hi")));
    }
  }
  c.model = make_suspension(base, roof, std::move(tc), opts);

  if (const toml::node* n = root.get("tolerances")) {
    for (const auto& [k, v] : table_at(n, "tolerances")) {
      const std::string key(k.str());
      c.tolerances[key] = number(&v, "tolerances." + key);
      if (!(c.tolerances[key] > 0.0)) throw bad("tolerances." + key, "must be positive");
    }
  }
  if (const toml::node* n = root.get("run")) {
    const toml::table& rt = table_at(n, "run");
    only_keys(rt, "run", {"seed", "out_dir"});
    if (const toml::node* s = rt.get("seed")) {
      if (!s->is_integer() || *s->value<std::int64_t>() < 0) throw bad("run.seed", "expected a non-negative integer");
      c.seed = std::uint64_t(*s->value<std::int64_t>());
    }
    if (const toml::node* o = rt.get("out_dir")) {
      if (!o->is_string()) throw bad("run.out_dir", "expected a string");
      c.out_dir = *o->value<std::string>();
    }
  }
  return c;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("config_unreadable", "cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  if (in.bad()) throw io_error("config_unreadable", "cannot read " + path.string());
  return s.str();
}

ModelConfig load_model(const fs::path& path) {
  if (fs::is_directory(path)) throw io_error("config_unreadable", path.string() + " is a directory");
  return parse_model(read_file(path), path.string());
}

std::vector<double> parse_list(const std::string& s, std::size_t expected) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const std::size_t end = std::min(s.find(',', pos), s.size());
    std::string f = s.substr(pos, end - pos);
    const auto a = f.find_first_not_of(" \t"), b = f.find_last_not_of(" \t");
    f = a == std::string::npos ? "" : f.substr(a, b - a + 1);
    double v = 0.0;
    const auto r = std::from_chars(f.data(), f.data() + f.size(), v);
    if (f.empty() || r.ec != std::errc() || r.ptr != f.data() + f.size() || !std::isfinite(v))
      throw validation_error("list", "bad number '" + f + "' in '" + s + "'");
    out.push_back(v);
    pos = end + 1;
  }
  if (expected && out.size() != expected)
    throw validation_error("list", "expected " + std::to_string(expected) + " values in '" + s + "'");
  return out;
}

Point3 parse_point(const std::string& s) {
  const auto v = parse_list(s, 3);
  return Point3(v[0], v[1], v[2]);
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) v = 0.0;  // drop the sign of zero
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string csv_field(const std::string& f) {
  if (f.find_first_of(",\"\r\n") == std::string::npos) return f;
  std::string q = "\"";
  for (char c : f) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + '"';
}

Csv::Csv(std::vector<std::string> header) : width_(header.size()) {
  for (std::size_t i = 0; i < header.size(); ++i) text_ += (i ? "," : "") + csv_field(header[i]);
  text_ += "\r\n";
}

Csv& Csv::row(const std::vector<std::string>& fields) {
  if (fields.size() != width_) throw validation_error("csv", "row width does not match the header");
  for (std::size_t i = 0; i < fields.size(); ++i) text_ += (i ? "," : "") + csv_field(fields[i]);
  text_ += "\r\n";
  ++rows_;
  return *this;
}

Csv& Csv::row(const std::vector<double>& fields) {
  std::vector<std::string> s;
  s.reserve(fields.size());
  for (double v : fields) s.push_back(format_double(v));
  return row(s);
}

std::string Csv::str() const { return text_; }

int CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return int(i);
  return -1;
}

CsvTable parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> rec;
  std::string field;
  bool quoted = false, was_quoted = false;
  std::size_t i = 0;
  auto end_field = [&] {
    rec.push_back(field);
    field.clear();
    was_quoted = false;
  };
  while (i < text.size()) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      if (!field.empty() || was_quoted) throw validation_error("csv", "stray quote in an unquoted field");
      quoted = was_quoted = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\r' || c == '\n') {
      end_field();
      records.push_back(std::move(rec));
      rec.clear();
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
    } else {
      if (was_quoted) throw validation_error("csv", "text after a closing quote");
      field += c;
    }
    ++i;
  }
  if (quoted) throw validation_error("csv", "unterminated quoted field");
  if (!field.empty() || !rec.empty() || was_quoted) {
    end_field();
    records.push_back(std::move(rec));
  }
  if (records.empty()) throw validation_error("csv", "empty file");
  CsvTable t;
  t.header = records.front();
  t.rows.assign(records.begin() + 1, records.end());
  return t;
}

CsvTable read_csv(const fs::path& path) { return parse_csv(read_file(path)); }

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw io_error("sha256", "digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

std::string dump_json(const json& j) { return j.dump(2) + "\n"; }

RunWriter::RunWriter(fs::path dir, std::string command) : dir_(std::move(dir)), command_(std::move(command)) {}

void RunWriter::param(const std::string& key, const std::string& value) { params_.emplace_back(key, value); }

void RunWriter::config(const std::string& origin, const std::string& text) { configs_.emplace_back(origin, text); }

void RunWriter::artifact(const std::string& name, const std::string& bytes) {
  for (const auto& a : artifacts_)
    if (a.first == name) throw io_error("artifact", "duplicate artifact " + name);
  artifacts_.emplace_back(name, bytes);
}

void RunWriter::json(const std::string& name, const nlohmann::json& j) { artifact(name, dump_json(j)); }

std::string RunWriter::manifest() const {
  std::ostringstream s;
  s << "anosov manifest 1\n";
  s << "command " << command_ << "\n";
  for (const auto& [k, v] : params_) s << "param " << k << " = " << v << "\n";
  for (const auto& [origin, text] : configs_) {
    s << "config " << origin << " sha256 " << sha256_hex(text) << " bytes " << text.size() << "\n";
    std::istringstream lines(text);
    for (std::string line; std::getline(lines, line);) s << "| " << line << "\n";
  }
  for (const auto& [name, bytes] : artifacts_)
    s << "artifact " << name << " sha256 " << sha256_hex(bytes) << " bytes " << bytes.size() << "\n";
  return s.str();
}

void RunWriter::finish() {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw io_error("write_failed", "cannot create " + dir_.string() + ": " + ec.message());
  auto put = [&](const std::string& name, const std::string& bytes) {
    std::ofstream out(dir_ / name, std::ios::binary | std::ios::trunc);
    out << bytes;
    out.close();
    if (!out) throw io_error("write_failed", "cannot write " + (dir_ / name).string());
  };
  for (const auto& [name, bytes] : artifacts_) put(name, bytes);
  put("manifest.txt", manifest());
}

namespace {

bool is_number(const std::string& f) {
  double v;
  const auto r = std::from_chars(f.data(), f.data() + f.size(), v);
  return !f.empty() && r.ec == std::errc() && r.ptr == f.data() + f.size();
}

bool is_integer(const std::string& f) {
  long long v;
  const auto r = std::from_chars(f.data(), f.data() + f.size(), v);
  return !f.empty() && r.ec == std::errc() && r.ptr == f.data() + f.size();
}

void check_bounds(const json& spec, double v, const std::string& where, std::vector<std::string>& errs) {
  if (spec.contains("min") && v < spec["min"].get<double>()) errs.push_back(where + ": below minimum");
  if (spec.contains("max") && v > spec["max"].get<double>()) errs.push_back(where + ": above maximum");
}

void check_value(const json& spec, const json& v, const std::string& where, std::vector<std::string>& errs) {
  if (v.is_null() && spec.value("nullable", false)) return;
  const std::string type = spec.value("type", "any");
  bool ok = true;
  if (type == "number") ok = v.is_number();
  else if (type == "integer") ok = v.is_number_integer();
  else if (type == "string") ok = v.is_string();
  else if (type == "boolean") ok = v.is_boolean();
  else if (type == "array") ok = v.is_array();
  else if (type == "object") ok = v.is_object();
  if (!ok) {
    errs.push_back(where + ": expected " + type);
    return;
  }
  if (v.is_number()) check_bounds(spec, v.get<double>(), where, errs);
  if (v.is_string() && spec.contains("enum")) {
    bool found = false;
    for (const auto& e : spec["enum"]) found = found || e == v;
    if (!found) errs.push_back(where + ": value not allowed");
  }
  if (v.is_array() && spec.contains("items")) {
    if (spec.contains("length") && v.size() != spec["length"].get<std::size_t>())
      errs.push_back(where + ": wrong length");
    for (std::size_t i = 0; i < v.size(); ++i) check_value(spec["items"], v[i], where + "[" + std::to_string(i) + "]", errs);
  }
  if (v.is_object()) {
    if (spec.contains("required"))
      for (const auto& k : spec["required"])
        if (!v.contains(k.get<std::string>())) errs.push_back(where + ": missing '" + k.get<std::string>() + "'");
    if (spec.contains("properties"))
      for (const auto& [k, sub] : spec["properties"].items())
        if (v.contains(k)) check_value(sub, v[k], where + "." + k, errs);
  }
}

}  // namespace

std::vector<std::string> validate_csv(const json& schema, const std::string& text) {
  std::vector<std::string> errs;
  CsvTable t;
  try {
    t = parse_csv(text);
  } catch (const Error& e) {
    return {e.what()};
  }
  const json& cols = schema.at("columns");
  if (t.header.size() != cols.size()) errs.push_back("header: expected " + std::to_string(cols.size()) + " columns");
  for (std::size_t c = 0; c < std::min(t.header.size(), cols.size()); ++c)
    if (t.header[c] != cols[c].at("name").get<std::string>())
      errs.push_back("header: column " + std::to_string(c + 1) + " is '" + t.header[c] + "', expected '" +
                     cols[c].at("name").get<std::string>() + "'");
  if (schema.contains("min_rows") && t.rows.size() < schema["min_rows"].get<std::size_t>())
    errs.push_back("too few rows");
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const std::string where = "row " + std::to_string(r + 2);
    if (t.rows[r].size() != t.header.size()) {
      errs.push_back(where + ": wrong field count");
      continue;
    }
    for (std::size_t c = 0; c < std::min(t.rows[r].size(), cols.size()); ++c) {
      const std::string& f = t.rows[r][c];
      const std::string type = cols[c].value("type", "string");
      const std::string w = where + " column " + cols[c].at("name").get<std::string>();
      if (type == "number") {
        if (!is_number(f)) errs.push_back(w + ": not a number");
        else check_bounds(cols[c], std::stod(f), w, errs);
      } else if (type == "integer") {
        if (!is_integer(f)) errs.push_back(w + ": not an integer");
        else check_bounds(cols[c], double(std::stoll(f)), w, errs);
      } else if (type == "boolean") {
        if (f != "true" && f != "false") errs.push_back(w + ": not a boolean");
      }
    }
  }
  return errs;
}

std::vector<std::string> validate_json(const json& schema, const std::string& text) {
  json v;
  try {
    v = json::parse(text);
  } catch (const json::parse_error& e) {
    return {std::string("parse: ") + e.what()};
  }
  json spec = schema;
  spec["type"] = "object";
  std::vector<std::string> errs;
  check_value(spec, v, "$", errs);
  return errs;
}

std::vector<std::string> validate_artifact(const json& schema, const std::string& text) {
  const std::string format = schema.value("format", "");
  if (format == "csv") return validate_csv(schema, text);
  if (format == "json") return validate_json(schema, text);
  throw validation_error("schema", "unknown format '" + format + "'");
}

}  // namespace anosov::io
