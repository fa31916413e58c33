#pragma once

#include "anosov/manifold.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace anosov::io {

Error io_error(std::string code, const std::string& msg);

// Raw text of a TOML model file plus the parsed model; `config_unreadable` (io) when the file
// is missing or not valid TOML, validation errors for well-formed files with bad contents.
struct ModelConfig {
  std::string path, text;
  FlowModel model;
  std::uint64_t seed = 1;                     // [run] seed
  std::optional<std::string> out_dir;         // [run] out_dir
  std::map<std::string, double> tolerances;   // [tolerances], all numeric
  double tolerance(const std::string& key, double fallback) const;
};

ModelConfig load_model(const std::filesystem::path& path);
ModelConfig parse_model(const std::string& text, const std::string& origin = "<string>");

// "x,y,z" style lists
std::vector<double> parse_list(const std::string& s, std::size_t expected = 0);
Point3 parse_point(const std::string& s);

// shortest round-trip decimal; identical bits give identical text
std::string format_double(double v);

// RFC 4180: CRLF line ends, fields quoted when they hold a comma, quote, CR or LF
class Csv {
public:
  explicit Csv(std::vector<std::string> header);
  Csv& row(const std::vector<std::string>& fields);
  Csv& row(const std::vector<double>& fields);
  std::string str() const;
  std::size_t rows() const { return rows_; }

private:
  std::size_t width_, rows_ = 0;
  std::string text_;
};
std::string csv_field(const std::string& f);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  int column(const std::string& name) const;  // -1 when absent
};
CsvTable parse_csv(const std::string& text);
CsvTable read_csv(const std::filesystem::path& path);

std::string sha256_hex(const std::string& bytes);
std::string read_file(const std::filesystem::path& path);

// Collects artifacts for one run and writes them plus manifest.txt into the output directory.
class RunWriter {
public:
  RunWriter(std::filesystem::path dir, std::string command);
  void param(const std::string& key, const std::string& value);
  void config(const std::string& origin, const std::string& text);
  void artifact(const std::string& name, const std::string& bytes);
  void json(const std::string& name, const nlohmann::json& j);
  // manifest text (no timestamps, relative names only)
  std::string manifest() const;
  void finish();
  const std::filesystem::path& dir() const { return dir_; }

private:
  std::filesystem::path dir_;
  std::string command_;
  std::vector<std::pair<std::string, std::string>> params_;
  std::vector<std::pair<std::string, std::string>> configs_;
  std::vector<std::pair<std::string, std::string>> artifacts_;
};

std::string dump_json(const nlohmann::json& j);

// Artifact schemas (schemas/*.json):
//   {"format": "csv", "columns": [{"name": "tau", "type": "number"}, ...]}
//   {"format": "json", "properties": {"value": {"type": "number", "min": 0, "max": 2}}, "required": [...]}
// Types: number, integer, string, boolean, array, object; "nullable": true admits null (non-finite
// numbers are written as null). Returns one message per violation.
std::vector<std::string> validate_csv(const nlohmann::json& schema, const std::string& text);
std::vector<std::string> validate_json(const nlohmann::json& schema, const std::string& text);
std::vector<std::string> validate_artifact(const nlohmann::json& schema, const std::string& text);

}  // namespace anosov::io
