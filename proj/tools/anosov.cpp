#include "anosov/checks.hpp"
#include "anosov/geometry.hpp"
#include "anosov/io.hpp"
#include "anosov/mixing.hpp"
#include "anosov/oscint.hpp"
#include "anosov/perturb.hpp"
#include "anosov/rng.hpp"
#include "anosov/sections.hpp"
#include "anosov/splitting.hpp"
#include "anosov/torsion.hpp"

#include <CLI11.hpp>
#include <omp.h>

#include <cmath>
#include <cstdlib>
#include <iostream>
#include <set>

namespace fs = std::filesystem;
using namespace anosov;
using nlohmann::json;
using io::format_double;

namespace {

// sysexits-style codes
constexpr int exit_ok = 0, exit_validation = 2, exit_numerical = 3, exit_usage = 64, exit_noinput = 66,
              exit_software = 70, exit_cantcreat = 73;

const std::set<std::string> subcommands = {"splitting", "curve",   "template", "miniature",         "torsion",
                                           "ni-check",  "mix",     "perturb",  "bargmann-selftest", "selftest"};

struct Common {
  std::string model_path, out;
  std::optional<std::uint64_t> seed;
  int threads = 0;
};

struct Run {
  io::ModelConfig cfg;
  io::RunWriter writer;
  std::uint64_t seed = 1;
};

fs::path out_dir(const Common& c, const std::optional<std::string>& from_config, const std::string& command) {
  if (!c.out.empty()) return c.out;
  if (from_config) return *from_config;
  if (const char* env = std::getenv("ANOSOV_OUT_DIR"); env && *env) return fs::path(env) / command;
  return fs::path("anosov-out") / command;
}

Run open_model_run(const Common& c, const std::string& command) {
  io::ModelConfig cfg = io::load_model(c.model_path);
  const std::uint64_t seed = c.seed.value_or(cfg.seed);
  Run r{cfg, io::RunWriter(out_dir(c, cfg.out_dir, command), command), seed};
  r.writer.param("model", c.model_path);
  r.writer.param("seed", std::to_string(seed));
  r.writer.config(c.model_path, cfg.text);
  return r;
}

io::RunWriter open_plain_run(const Common& c, const std::string& command) {
  return io::RunWriter(out_dir(c, std::nullopt, command), command);
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v[i]);
  return s;
}

json point_json(const Point3& p) { return json::array({p.x(), p.y(), p.z()}); }

// explicit points, else n points drawn from (seed)
std::vector<Point3> points_for(const FlowModel& m, const std::vector<std::string>& given, int n, std::uint64_t seed) {
  std::vector<Point3> pts;
  for (const auto& s : given) pts.push_back(io::parse_point(s));
  for (int i = 0; i < n; ++i) {
    const double x = rng::uniform(seed, i, 0), y = rng::uniform(seed, i, 1);
    pts.emplace_back(x, y, rng::uniform(seed, i, 2) * m.r(Vec2(x, y)));
  }
  if (pts.empty()) throw validation_error("points", "give --point or --points");
  return pts;
}

// "lo:hi:step" (inclusive) or a comma list
std::vector<double> parse_grid(const std::string& s) {
  if (s.find(':') == std::string::npos) return io::parse_list(s);
  std::string t = s;
  std::replace(t.begin(), t.end(), ':', ',');
  const auto v = io::parse_list(t, 3);
  if (!(v[2] > 0) || v[1] < v[0]) throw validation_error("grid", "expected lo:hi:step with step > 0 and hi >= lo");
  const long n = std::lround(std::floor((v[1] - v[0]) / v[2] + 1e-9));
  if (n > 1000000) throw validation_error("grid", "too many nodes");
  std::vector<double> g;
  for (long i = 0; i <= n; ++i) g.push_back(v[0] + i * v[2]);
  return g;
}

Reference parse_reference(const std::string& s) {
  if (s == "min_norm") return Reference::min_norm;
  if (s == "transverse") return Reference::transverse;
  throw validation_error("reference", "expected min_norm or transverse");
}

// "kx:ky:profile[:n]" terms joined by '+', profile in {one, fourier, bump}
std::vector<ObsTerm> parse_observable(const std::string& s) {
  std::vector<ObsTerm> terms;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const std::size_t end = std::min(s.find('+', pos), s.size());
    const std::string term = s.substr(pos, end - pos);
    std::vector<std::string> f;
    std::size_t p = 0;
    while (p <= term.size()) {
      const std::size_t e = std::min(term.find(':', p), term.size());
      f.push_back(term.substr(p, e - p));
      p = e + 1;
    }
    if (f.size() < 3 || f.size() > 4) throw validation_error("observable", "expected kx:ky:profile[:n], got '" + term + "'");
    ObsTerm t;
    try {
      std::size_t used = 0;
      t.kx = std::stoi(f[0], &used);
      if (used != f[0].size()) throw std::invalid_argument("kx");
      t.ky = std::stoi(f[1], &used);
      if (used != f[1].size()) throw std::invalid_argument("ky");
      if (f.size() == 4) {
        t.n = std::stoi(f[3], &used);
        if (used != f[3].size()) throw std::invalid_argument("n");
      }
    } catch (const std::logic_error&) {
      throw validation_error("observable", "bad integer in '" + term + "'");
    }
    if (f[2] == "one") t.profile = FiberProfile::one;
    else if (f[2] == "fourier") t.profile = FiberProfile::fourier;
    else if (f[2] == "bump") t.profile = FiberProfile::bump;
    else throw validation_error("observable", "profile must be one, fourier or bump");
    terms.push_back(t);
    pos = end + 1;
  }
  return terms;
}

SectionOptions section_options(const io::ModelConfig& cfg) {
  SectionOptions o;
  o.split.tol = cfg.tolerance("split", o.split.tol);
  o.cutoff = cfg.tolerance("series_cutoff", o.cutoff);
  return o;
}

// subcommands

void cmd_splitting(const Common& c, const std::vector<std::string>& given, int n) {
  Run r = open_model_run(c, "splitting");
  const FlowModel& m = r.cfg.model;
  SplitOptions o;
  o.tol = r.cfg.tolerance("split", o.tol);
  r.writer.param("points", std::to_string(n));
  for (const auto& p : given) r.writer.param("point", p);
  io::Csv csv({"x", "y", "z", "es_x", "es_y", "es_z", "eu_x", "eu_y", "eu_z", "d0_x", "d0_y", "d0_z", "ds_x", "ds_y",
               "ds_z", "du_x", "du_y", "du_z", "residual", "condition"});
  for (const Point3& p : points_for(m, given, n, r.seed)) {
    const Frame f = splitting_at(m, p, o);
    std::vector<double> row;
    for (const Vec3* v : {&f.point, &f.e_s, &f.e_u, &f.dual_0, &f.dual_s, &f.dual_u}) row.insert(row.end(), v->data(), v->data() + 3);
    row.push_back(f.residual);
    row.push_back(f.condition);
    csv.row(row);
  }
  r.writer.artifact("splitting.csv", csv.str());
  r.writer.finish();
}

void cmd_curve(const Common& c, const std::string& point, const std::string& kind, double length, double step) {
  Run r = open_model_run(c, "curve");
  if (kind != "unstable" && kind != "stable") throw validation_error("kind", "expected unstable or stable");
  if (!(length > 0 && length <= 4)) throw validation_error("length", "need 0 < L <= 4");
  if (!(step > 0 && step <= length)) throw validation_error("step", "need 0 < step <= L");
  r.writer.param("point", point);
  r.writer.param("kind", kind);
  r.writer.param("length", format_double(length));
  r.writer.param("step", format_double(step));
  const InvariantCurve cv = invariant_curve(r.cfg.model, io::parse_point(point),
                                            kind == "unstable" ? CurveKind::unstable : CurveKind::stable, length, step);
  io::Csv csv({"tau", "x", "y", "z", "t_x", "t_y", "t_z", "factor"});
  for (std::size_t i = 0; i < cv.tau.size(); ++i)
    csv.row(std::vector<double>{cv.tau[i], cv.points[i].x(), cv.points[i].y(), cv.points[i].z(), cv.tangents[i].x(),
                                cv.tangents[i].y(), cv.tangents[i].z(), cv.factor[i]});
  r.writer.artifact("curve.csv", csv.str());
  r.writer.finish();
}

void cmd_template(const Common& c, const std::string& point, int grid, const std::string& reference) {
  Run r = open_model_run(c, "template");
  SectionOptions o = section_options(r.cfg);
  o.grid = grid;
  o.reference = parse_reference(reference);
  r.writer.param("point", point);
  r.writer.param("grid", std::to_string(grid));
  r.writer.param("reference", reference);
  const Template T = s_template(r.cfg.model, io::parse_point(point), o);
  io::Csv csv({"tau", "psi"});
  double mx = 0.0;
  for (std::size_t i = 0; i < T.tau.size(); ++i) {
    csv.row(std::vector<double>{T.tau[i], T.values[i]});
    mx = std::max(mx, std::abs(T.values[i]));
  }
  json j;
  j["basepoint"] = point_json(T.basepoint);
  j["grid"] = T.tau.size();
  j["terms"] = T.terms;
  j["tail_bound"] = T.tail_bound;
  j["lipschitz"] = T.lipschitz;
  j["max_abs_psi"] = mx;
  j["sign"] = T.sign;
  j["reference"] = reference;
  r.writer.artifact("template.csv", csv.str());
  r.writer.json("template.json", j);
  r.writer.finish();
}

void cmd_miniature(const Common& c, const std::string& point, const std::string& deltas) {
  Run r = open_model_run(c, "miniature");
  const auto ds = io::parse_list(deltas);
  r.writer.param("point", point);
  r.writer.param("delta", join(ds));
  const Point3 q = io::parse_point(point);
  io::Csv csv({"delta", "t", "residual", "alpha", "beta", "alpha_over_log"});
  for (double d : ds) {
    const Miniature mn = miniature_residual(r.cfg.model, q, d, section_options(r.cfg));
    csv.row(std::vector<double>{d, mn.t, mn.residual, mn.alpha, mn.beta, mn.alpha_over_log});
  }
  r.writer.artifact("miniature.csv", csv.str());
  r.writer.finish();
}

void cmd_torsion(const Common& c, const std::vector<std::string>& given, int n, const std::string& deltas) {
  Run r = open_model_run(c, "torsion");
  const auto ds = io::parse_list(deltas);
  r.writer.param("points", std::to_string(n));
  for (const auto& p : given) r.writer.param("point", p);
  r.writer.param("delta", join(ds));
  TorsionOptions o;
  o.sections = section_options(r.cfg);
  io::Csv csv({"x", "y", "z", "delta", "tor_s", "tor_u", "Delta", "affine_residual"});
  for (const Point3& p : points_for(r.cfg.model, given, n, r.seed))
    for (double d : ds) {
      const TorsionReport t = torsions_and_delta(r.cfg.model, p, d, o);
      csv.row(std::vector<double>{p.x(), p.y(), p.z(), d, t.tor_s, t.tor_u, t.delta_value, t.affine_residual});
    }
  r.writer.artifact("torsion.csv", csv.str());
  r.writer.finish();
}

void cmd_ni(const Common& c, const std::string& path, double b, double rho, const std::string& range) {
  io::RunWriter w = open_plain_run(c, "ni-check");
  io::CsvTable t;
  std::string text;
  try {
    text = io::read_file(path);
  } catch (const Error&) {
    throw io::io_error("config_unreadable", "cannot read template " + path);
  }
  t = io::parse_csv(text);
  const int ct = t.column("tau"), cp = t.column("psi");
  if (ct < 0 || cp < 0) throw validation_error("template", "CSV needs tau and psi columns");
  std::vector<double> tau, psi;
  for (const auto& row : t.rows) {
    if (row.size() != t.header.size()) throw validation_error("template", "ragged CSV row");
    tau.push_back(io::parse_list(row[ct], 1)[0]);
    psi.push_back(io::parse_list(row[cp], 1)[0]);
  }
  MarginOptions o;
  o.rho = rho;
  if (!range.empty()) {
    const auto a = io::parse_list(range, 2);
    if (!(a[0] < a[1])) throw validation_error("alpha-range", "need lo < hi");
    o.alpha_lo = a[0];
    o.alpha_hi = a[1];
  }
  w.param("template", path);
  w.param("b", format_double(b));
  w.param("rho", format_double(rho));
  w.param("alpha-range", range);
  w.config(path, text);
  const OscIntegralReport rep = ni_margin(Profile(tau, psi), b, o);
  json j;
  j["b"] = rep.b;
  j["rho"] = rep.rho;
  j["alpha_star"] = rep.alpha_star;
  j["value"] = rep.value;
  j["threshold"] = rep.threshold;
  j["passes_ni"] = rep.passes_ni;
  j["alpha_range"] = json::array({rep.alpha_lo, rep.alpha_hi});
  j["outside_bound"] = rep.outside_bound;
  j["evaluations"] = rep.evaluations;
  j["grid"] = tau.size();
  w.json("ni.json", j);
  w.finish();
}

void cmd_mix(const Common& c, const std::string& obs_a, const std::string& obs_b, const std::string& grid,
             std::size_t n) {
  Run r = open_model_run(c, "mix");
  const std::vector<double> t = grid.empty() ? default_time_grid() : parse_grid(grid);
  const std::string b_spec = obs_b.empty() ? obs_a : obs_b;
  r.writer.param("obs", obs_a);
  r.writer.param("obs-b", b_spec);
  r.writer.param("grid", join(t));
  r.writer.param("n", std::to_string(n));
  const Observable a = make_observable(r.cfg.model, parse_observable(obs_a));
  const Observable b = make_observable(r.cfg.model, parse_observable(b_spec));
  const CorrelationSeries s = correlation_series(r.cfg.model, a, b, t, n, r.seed);
  FitOptions fo;
  fo.snr = r.cfg.tolerance("fit_snr", fo.snr);
  const DecayFit f = fit_decay(s, fo);
  io::Csv csv({"t", "re_C", "im_C", "stderr"});
  for (std::size_t k = 0; k < s.t.size(); ++k)
    csv.row(std::vector<double>{s.t[k], s.value[k].real(), s.value[k].imag(), s.stderr_[k]});
  json j;
  j["observable_a"] = s.obs_a;
  j["observable_b"] = s.obs_b;
  j["samples"] = s.samples;
  j["seed"] = s.seed;
  j["detected"] = f.detected;
  j["verdict"] = f.verdict;
  j["rate"] = f.rate;
  j["rate_stderr"] = f.rate_stderr;
  j["rate_ci95"] = json::array({f.rate_lo, f.rate_hi});
  j["amplitude"] = f.amplitude;
  j["r2"] = f.r2;
  j["points"] = f.points;
  j["t_end"] = f.t_end;
  r.writer.artifact("correlation.csv", csv.str());
  r.writer.json("fit.json", j);
  r.writer.finish();
}

void cmd_perturb(const Common& c, const std::string& anchor, double b, int R, int index, const std::string& tgrid,
                 int grid) {
  Run r = open_model_run(c, "perturb");
  const std::vector<double> t = parse_grid(tgrid);
  r.writer.param("anchor", anchor);
  r.writer.param("b", format_double(b));
  r.writer.param("R", std::to_string(R));
  r.writer.param("index", std::to_string(index));
  r.writer.param("t-grid", join(t));
  r.writer.param("grid", std::to_string(grid));
  BumpOptions bo;
  bo.b = b;
  bo.R = R;
  const FamilyPtr F = make_bump_family(r.cfg.model, io::parse_point(anchor), bo);
  if (index < 1 || index > F->count())
    throw validation_error("index", "bump index must be in [1, " + std::to_string(F->count()) + "]");
  ResponseOptions ro;
  ro.grid = grid;
  const TemplateResponse resp = template_response(F, index, t, ro);
  io::Csv csv({"t", "tau", "delta"});
  for (std::size_t i = 0; i < resp.t.size(); ++i)
    for (std::size_t k = 0; k < resp.tau.size(); ++k) csv.row(std::vector<double>{resp.t[i], resp.tau[k], resp.delta[i][k]});
  json j;
  j["index"] = resp.j;
  j["bumps"] = F->count();
  j["slope_j"] = resp.slope_j;
  j["analytic"] = resp.analytic;
  j["ratio"] = resp.ratio;
  j["locality"] = resp.locality;
  j["linearity"] = resp.linearity;
  j["a0"] = F->a0();
  r.writer.artifact("perturb.csv", csv.str());
  r.writer.json("perturb.json", j);
  r.writer.finish();
}

// report plus exit 3 when any check fails
int cmd_checks(const Common& c, const std::string& command, const std::vector<checks::Criterion>& results) {
  io::RunWriter w = open_plain_run(c, command);
  json j;
  j["criteria"] = json::array();
  bool pass = true;
  for (const auto& r : results) {
    // runtimes vary run to run; the report keeps only pass/fail and measured errors
    json e = checks::to_json(r);
    e.erase("seconds");
    j["criteria"].push_back(e);
    pass = pass && r.pass();
    std::cout << checks::summary_line(r) << "\n";
  }
  j["pass"] = pass;
  w.json(command == "selftest" ? "selftest.json" : "bargmann.json", j);
  w.finish();
  return pass ? exit_ok : exit_numerical;
}

int exit_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::validation: return exit_validation;
    case ErrorKind::numerical: return exit_numerical;
    case ErrorKind::io: return e.code() == "config_unreadable" ? exit_noinput : exit_cantcreat;
  }
  return exit_software;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Anosov-flow sandbox: suspension flows, templates, torsion, mixing and wavepacket checks"};
  app.require_subcommand(1);
  Common common;
  app.add_option("--threads", common.threads, "worker cap (results do not depend on it)")->check(CLI::NonNegativeNumber);

  auto model_opts = [&](CLI::App* s) {
    s->add_option("--model", common.model_path, "TOML model file")->required();
    s->add_option("--out", common.out, "output directory (default $ANOSOV_OUT_DIR/<command>)");
    s->add_option("--seed", common.seed, "overrides [run] seed");
    s->add_option("--threads", common.threads, "worker cap")->check(CLI::NonNegativeNumber);
  };
  auto plain_opts = [&](CLI::App* s) {
    s->add_option("--out", common.out, "output directory (default $ANOSOV_OUT_DIR/<command>)");
    s->add_option("--threads", common.threads, "worker cap")->check(CLI::NonNegativeNumber);
  };

  std::vector<std::string> points;
  int n_points = 0;
  std::string point, kind = "unstable", reference = "min_norm", deltas = "0.5,0.25,0.125";
  double length = 1.0, step = 1.0 / 64;
  int grid = 513;

  auto* sp = app.add_subcommand("splitting", "stable/unstable frames at points");
  model_opts(sp);
  sp->add_option("--point", points, "x,y,z (repeatable)");
  sp->add_option("--points", n_points, "random points from the seed")->check(CLI::NonNegativeNumber);

  auto* cu = app.add_subcommand("curve", "invariant curve by intrinsic arc length");
  model_opts(cu);
  cu->add_option("--point", point, "x,y,z")->required();
  cu->add_option("--kind", kind, "unstable or stable");
  cu->add_option("--length", length, "half length L <= 4");
  cu->add_option("--step", step, "intrinsic step");

  auto* te = app.add_subcommand("template", "s-template on [-1, 1]");
  model_opts(te);
  te->add_option("--point", point, "x,y,z")->required();
  te->add_option("--grid", grid, "uniform nodes")->check(CLI::Range(3, 100000));
  te->add_option("--reference", reference, "min_norm or transverse");

  auto* mi = app.add_subcommand("miniature", "affine residual of the rescaled template");
  model_opts(mi);
  mi->add_option("--point", point, "x,y,z")->required();
  std::string mdelta = "0.25";
  mi->add_option("--delta", mdelta, "comma list of scales in (0, 1]");

  auto* to = app.add_subcommand("torsion", "(Tor^s, Tor^u, Delta) table");
  model_opts(to);
  to->add_option("--point", points, "x,y,z (repeatable)");
  to->add_option("--points", n_points, "random points from the seed")->check(CLI::NonNegativeNumber);
  to->add_option("--delta", deltas, "comma list of scales");

  std::string tpath, range;
  double b = 100.0, rho = 0.05;
  auto* ni = app.add_subcommand("ni-check", "oscillatory margin of a template CSV");
  plain_opts(ni);
  ni->add_option("--template", tpath, "CSV with tau, psi columns")->required();
  ni->add_option("--b", b, "frequency")->required();
  ni->add_option("--rho", rho, "exponent in b^-rho");
  ni->add_option("--alpha-range", range, "lo,hi (default [-|b|, |b|])");

  std::string obs = "0:0:fourier:1", obs_b, tgrid;
  std::size_t n_samples = 100000;
  auto* mx = app.add_subcommand("mix", "correlation series and decay fit");
  model_opts(mx);
  mx->add_option("--obs", obs, "kx:ky:profile[:n] terms joined by '+'");
  mx->add_option("--obs-b", obs_b, "second observable (default: --obs)");
  mx->add_option("--grid", tgrid, "lo:hi:step or comma list (default 0:20:0.5)");
  mx->add_option("--n", n_samples, "samples")->check(CLI::PositiveNumber);

  std::string anchor = "0.3,0.2,0.4", ptgrid = "-1:1:0.5";
  double pb = 256.0;
  int R = 2, index = 8, rgrid = 129;
  auto* pe = app.add_subcommand("perturb", "template response to one bump time change");
  model_opts(pe);
  pe->add_option("--anchor", anchor, "x,y,z");
  pe->add_option("--b", pb, "frequency");
  pe->add_option("--R", R, "regularity index")->check(CLI::PositiveNumber);
  pe->add_option("--index", index, "bump j");
  pe->add_option("--t-grid", ptgrid, "lo:hi:step or comma list, |t| <= 4");
  pe->add_option("--grid", rgrid, "tau nodes")->check(CLI::Range(5, 100000));

  auto* bs = app.add_subcommand("bargmann-selftest", "wavepacket identity suite, JSON report");
  plain_opts(bs);

  std::size_t st_samples = 1000000;
  auto* st = app.add_subcommand("selftest", "every invariant check, JSON report");
  plain_opts(st);
  st->add_option("--mixing-samples", st_samples, "samples for the mixing criterion")->check(CLI::PositiveNumber);

  if (argc > 1 && argv[1][0] != '-' && !subcommands.count(argv[1])) {
    std::cerr << "unknown subcommand '" << argv[1] << "'\n" << app.help();
    return exit_usage;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ConversionError& e) {
    app.exit(e);
    return exit_validation;
  } catch (const CLI::ValidationError& e) {
    app.exit(e);
    return exit_validation;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_usage;
  }
  if (common.threads > 0) omp_set_num_threads(common.threads);

  try {
    if (*sp) cmd_splitting(common, points, n_points);
    else if (*cu) cmd_curve(common, point, kind, length, step);
    else if (*te) cmd_template(common, point, grid, reference);
    else if (*mi) cmd_miniature(common, point, mdelta);
    else if (*to) cmd_torsion(common, points, n_points, deltas);
    else if (*ni) cmd_ni(common, tpath, b, rho, range);
    else if (*mx) cmd_mix(common, obs, obs_b, tgrid, n_samples);
    else if (*pe) cmd_perturb(common, anchor, pb, R, index, ptgrid, rgrid);
    else if (*bs) return cmd_checks(common, "bargmann-selftest", {checks::bargmann_suite()});
    else if (*st) {
      checks::Scale scale;
      scale.mixing_samples = st_samples;
      std::vector<checks::Criterion> all;
      for (int i = 1; i <= checks::criterion_count; ++i) all.push_back(checks::run_criterion(i, scale));
      return cmd_checks(common, "selftest", all);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_for(e);
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return exit_software;
  }
  return exit_ok;
}
