#pragma once

// Batch experiments: a strict JSON configuration, the five suites and their
// report tables. Everything here is deterministic for a given config.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <regex>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "liouville/blowup_family.hpp"
#include "liouville/closed_forms.hpp"
#include "liouville/expansion_verify.hpp"
#include "liouville/linearized_modes.hpp"
#include "liouville/regression.hpp"

namespace liouville {

enum class HKind { constant, quadratic, linear };

// V(x) = v0, v0 + c|x|^2 or v0 + b x_1.
struct HSpec {
  HKind kind = HKind::constant;
  double param = 0.0;

  std::string text() const {
    char buf[64];
    switch (kind) {
      case HKind::constant: return "const";
      case HKind::quadratic: std::snprintf(buf, sizeof buf, "const+quadratic(%.17g)", param); return buf;
      case HKind::linear: std::snprintf(buf, sizeof buf, "const+linear(%.17g)", param); return buf;
    }
    return "const";
  }
  bool radial() const { return kind != HKind::linear; }

  LocalData local(double v0) const {
    switch (kind) {
      case HKind::constant: return LocalData::make(v0);
      case HKind::quadratic: return LocalData::make(v0, {}, Sym2{2 * param, 0.0, 2 * param});
      case HKind::linear: return LocalData::make(v0, {param, 0.0});
    }
    return LocalData::make(v0);
  }
  RadialFunction radial_function(double v0) const {
    if (kind == HKind::linear) throw Error("h_spec const+linear is not radial");
    return kind == HKind::constant ? RadialFunction::constant(v0) : RadialFunction::quadratic(v0, param);
  }

  static std::optional<HSpec> parse(const std::string& s) {
    if (s == "const") return HSpec{};
    static const std::regex re(R"(const\+(quadratic|linear)\(\s*([-+0-9.eE]+)\s*\))");
    std::smatch m;
    if (!std::regex_match(s, m, re)) return std::nullopt;
    try {
      std::size_t used = 0;
      const double v = std::stod(m[2].str(), &used);
      if (used != m[2].str().size() || !std::isfinite(v)) return std::nullopt;
      return HSpec{m[1].str() == "quadratic" ? HKind::quadratic : HKind::linear, v};
    } catch (const std::exception&) {
      return std::nullopt;
    }
  }
};

struct GridSpec {
  std::size_t n_radial = 8000;
  std::size_t n_angular = 64;
  double r_min = 1e-6;
};

struct ExperimentConfig {
  std::string suite;
  double alpha = 0.5;
  double v0 = 18.0;
  HSpec h_spec;
  std::vector<double> u0_list{16, 20, 24, 28};
  GridSpec grid;
  std::string output_dir = "results";
  std::uint64_t seed = 0;
};

inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"constants", "modes", "gcheck", "family", "residual", "all"};
  return names;
}

struct ConfigParse {
  std::optional<ExperimentConfig> config;
  std::vector<std::string> violations;
};

// Validates the whole document and reports every violation found.
inline ConfigParse parse_config(const std::string& text) {
  using nlohmann::json;
  ConfigParse out;
  auto& v = out.violations;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    v.push_back(std::string("config is not valid JSON: ") + e.what());
    return out;
  }
  if (!doc.is_object()) {
    v.push_back("config must be a JSON object");
    return out;
  }
  static const std::set<std::string> known{"suite", "alpha", "v0", "h_spec", "u0_list",
                                           "grid", "output_dir", "seed"};
  for (const auto& [key, _] : doc.items())
    if (!known.count(key)) v.push_back("unknown key '" + key + "'");

  ExperimentConfig c;
  auto number = [&](const char* key, double& dst, bool required) {
    if (!doc.contains(key)) {
      if (required) v.push_back(std::string("missing required key '") + key + "'");
      return false;
    }
    if (!doc[key].is_number()) {
      v.push_back(std::string("'") + key + "' must be a number");
      return false;
    }
    dst = doc[key].get<double>();
    return true;
  };

  if (!doc.contains("suite")) v.push_back("missing required key 'suite'");
  else if (!doc["suite"].is_string()) v.push_back("'suite' must be a string");
  else {
    c.suite = doc["suite"].get<std::string>();
    const auto& names = suite_names();
    if (std::find(names.begin(), names.end(), c.suite) == names.end())
      v.push_back("unknown suite '" + c.suite + "' (expected constants, modes, gcheck, family, residual or all)");
  }

  if (number("alpha", c.alpha, true)) {
    try {
      (void)Alpha(c.alpha);
    } catch (const Error& e) {
      v.push_back(e.what());
    }
  }
  if (number("v0", c.v0, true) && !(c.v0 > 0.0)) v.push_back("'v0' must be positive");

  if (doc.contains("h_spec")) {
    if (!doc["h_spec"].is_string()) v.push_back("'h_spec' must be a string");
    else if (auto h = HSpec::parse(doc["h_spec"].get<std::string>())) c.h_spec = *h;
    else
      v.push_back("'h_spec' must be one of const, const+quadratic(c), const+linear(b); got '" +
                  doc["h_spec"].get<std::string>() + "'");
  }

  if (doc.contains("u0_list")) {
    const auto& list = doc["u0_list"];
    if (!list.is_array() || list.empty()) v.push_back("'u0_list' must be a non-empty array of numbers");
    else {
      c.u0_list.clear();
      bool numeric = true;
      for (const auto& e : list) {
        if (!e.is_number()) numeric = false;
        else c.u0_list.push_back(e.get<double>());
      }
      if (!numeric) v.push_back("'u0_list' entries must be numbers");
      for (std::size_t i = 1; i < c.u0_list.size(); ++i)
        if (!(c.u0_list[i] > c.u0_list[i - 1])) {
          v.push_back("'u0_list' must be strictly increasing (non-increasing at position " +
                      std::to_string(i) + ")");
          break;
        }
      const double budget = 30.0 * (1.0 + c.alpha);
      for (double u : c.u0_list)
        if (!(u >= 0.0 && u <= budget)) {
          v.push_back("'u0_list' entries must lie in [0, 30(1+alpha)]");
          break;
        }
    }
  }

  if (doc.contains("grid")) {
    const auto& g = doc["grid"];
    if (!g.is_object()) v.push_back("'grid' must be an object");
    else {
      static const std::set<std::string> grid_keys{"n_radial", "n_angular", "r_min"};
      for (const auto& [key, _] : g.items())
        if (!grid_keys.count(key)) v.push_back("unknown key 'grid." + key + "'");
      auto count = [&](const char* key, std::size_t& dst, std::size_t lo, std::size_t hi) {
        if (!g.contains(key)) return;
        if (!g[key].is_number_integer()) {
          v.push_back(std::string("'grid.") + key + "' must be an integer");
          return;
        }
        const auto n = g[key].get<long long>();
        if (n < (long long)lo || n > (long long)hi)
          v.push_back(std::string("'grid.") + key + "' must lie in [" + std::to_string(lo) + ", " +
                      std::to_string(hi) + "]");
        else dst = std::size_t(n);
      };
      count("n_radial", c.grid.n_radial, 64, 100000);
      count("n_angular", c.grid.n_angular, 64, 4096);
      if (g.contains("r_min")) {
        if (!g["r_min"].is_number()) v.push_back("'grid.r_min' must be a number");
        else {
          c.grid.r_min = g["r_min"].get<double>();
          if (!(c.grid.r_min >= 1e-6 && c.grid.r_min <= 1e-2))
            v.push_back("'grid.r_min' must lie in [1e-6, 1e-2]");
        }
      }
    }
  }

  if (doc.contains("output_dir")) {
    if (!doc["output_dir"].is_string() || doc["output_dir"].get<std::string>().empty())
      v.push_back("'output_dir' must be a non-empty string");
    else c.output_dir = doc["output_dir"].get<std::string>();
  }
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_integer() || doc["seed"].get<long long>() < 0)
      v.push_back("'seed' must be a non-negative integer");
    else c.seed = doc["seed"].get<std::uint64_t>();
  }

  if (!c.h_spec.radial() && (c.suite == "family" || c.suite == "all"))
    v.push_back("suite '" + c.suite + "' needs a radial h_spec (const or const+quadratic)");

  if (v.empty()) out.config = c;
  return out;
}

// ---------------------------------------------------------------------------
// Reports.

struct Table {
  std::string name;
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::string csv() const {
    std::string s;
    for (std::size_t i = 0; i < header.size(); ++i) s += (i ? "," : "") + header[i];
    s += "\n";
    char buf[40];
    for (const auto& row : rows) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.12g", row[i]);
        s += (i ? "," : "") + std::string(buf);
      }
      s += "\n";
    }
    return s;
  }
};

struct Check {
  std::string name;
  double value;
  double threshold;
  std::string comparison;  // "<=" or ">="
  bool pass;
};

inline Check check_le(std::string name, double value, double threshold) {
  return {std::move(name), value, threshold, "<=", value <= threshold};
}
inline Check check_ge(std::string name, double value, double threshold) {
  return {std::move(name), value, threshold, ">=", value >= threshold};
}

struct SuiteResult {
  std::string name;
  std::vector<Check> checks{};
  std::vector<Table> tables{};
  nlohmann::json details = nlohmann::json::object();
  std::string error{};

  bool pass() const {
    if (!error.empty()) return false;
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
  }
};

struct RunOptions {
  unsigned jobs = 1;
};

// Relative defect |Λ2 v0 + Λ1| / |Λ1| over seeded random (α, v0).
inline double constants_identity_defect(std::uint64_t seed, std::size_t samples) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> alpha_dist(0.05, 5.0), v0_dist(0.5, 100.0);
  double worst = 0.0;
  for (std::size_t i = 0; i < samples;) {
    const double a = alpha_dist(rng);
    const double v0 = v0_dist(rng);
    if (std::abs(a - std::round(a)) < Alpha::default_guard && std::round(a) >= 1.0) continue;
    const auto c = expansion_coefficients(Alpha(a), v0);
    worst = std::max(worst, std::abs(c.lambda2 * v0 + c.lambda1) / std::abs(c.lambda1));
    ++i;
  }
  return worst;
}

inline SuiteResult suite_constants(const ExperimentConfig& cfg) {
  SuiteResult r{.name = "constants"};
  const Alpha alpha(cfg.alpha);
  const auto c = expansion_coefficients(alpha, cfg.v0);
  r.tables.push_back({"constants",
                      {"alpha", "v0", "a", "lambda1", "lambda2", "identity_defect"},
                      {{cfg.alpha, cfg.v0, bubble_coefficient(alpha, cfg.v0), c.lambda1, c.lambda2,
                        std::abs(c.lambda2 * cfg.v0 + c.lambda1)}}});
  r.checks.push_back(check_le("lambda2*v0+lambda1 relative defect (1000 seeded samples)",
                              constants_identity_defect(cfg.seed, 1000), 1e-12));
  return r;
}

inline SuiteResult suite_modes(const ExperimentConfig& cfg) {
  SuiteResult r{.name = "modes"};
  const auto report = kernel_triviality_report(Alpha(cfg.alpha), cfg.v0, 3);
  Table t{"modes", {"k", "exponent_at_zero", "exponent_at_infinity", "stderr_at_infinity", "certified"}, {}};
  for (const auto& m : report.modes) {
    t.rows.push_back({double(m.k), m.exponent_at_zero, m.exponent_at_infinity, m.stderr_at_infinity,
                      m.certified ? 1.0 : 0.0});
    r.checks.push_back(check_le("mode " + std::to_string(m.k) + " growth exponent deviation / k",
                                std::abs(m.exponent_at_infinity - m.k) / m.k, 0.05));
  }
  r.checks.push_back(check_ge("all modes certified", report.certified ? 1.0 : 0.0, 1.0));
  r.tables.push_back(std::move(t));
  return r;
}

inline SuiteResult suite_gcheck(const ExperimentConfig& cfg) {
  SuiteResult r{.name = "gcheck"};
  const Alpha alpha(cfg.alpha);
  const double R = 1e3;
  const auto g = solve_g_numeric(alpha, cfg.v0, R);
  Table t{"gcheck", {"r", "g_numeric", "g_closed", "rel_error"}, {}};
  double worst = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double rr = g.nodes()[i];
    if (rr < 1e-2 || rr > R / 10) continue;
    const double exact = eval_g(alpha, cfg.v0, rr).value;
    const double rel = std::abs(g.values()[i] - exact) / std::abs(exact);
    worst = std::max(worst, rel);
    if (i % 10 == 0) t.rows.push_back({rr, g.values()[i], exact, rel});
  }
  r.checks.push_back(check_le("max relative error of numeric g on [1e-2, R/10]", worst, 1e-6));
  r.tables.push_back(std::move(t));
  return r;
}

// Below this level a blown-up deviation is indistinguishable from zero at the
// default shooting tolerance (100 x tol).
inline constexpr double deviation_floor = 1e-8;

inline SuiteResult suite_family(const ExperimentConfig& cfg, const RunOptions& run) {
  SuiteResult r{.name = "family"};
  const Alpha alpha(cfg.alpha);
  const auto H = cfg.h_spec.radial_function(cfg.v0);
  FamilyOptions fo;
  fo.jobs = run.jobs;
  const auto records = run_family(alpha, H, cfg.u0_list, 1.0, fo);
  Table t{"family", {"u0", "delta", "mass", "sup_dev", "d_boundary", "argmax_radius"}, {}};
  const double quantum = 8.0 * std::numbers::pi * (1.0 + cfg.alpha);
  double max_mass = 0.0;
  for (const auto& rec : records) {
    t.rows.push_back({rec.u0, rec.delta, rec.mass, rec.sup_dev, rec.d_boundary, rec.argmax_radius});
    max_mass = std::max(max_mass, rec.mass);
  }
  r.tables.push_back(std::move(t));
  r.checks.push_back(check_le("final-row mass relative error vs 8pi(1+alpha)",
                              std::abs(records.back().mass - quantum) / quantum, 0.01));
  r.checks.push_back(check_le("max mass / 8pi(1+alpha)", max_mass / quantum, 1.1));

  if (cfg.h_spec.kind == HKind::constant) {
    double lo = INFINITY, hi = 0.0;
    for (const auto& rec : records) {
      const double s = std::max(rec.sup_dev, deviation_floor);
      lo = std::min(lo, s);
      hi = std::max(hi, s);
    }
    r.checks.push_back(check_le("sup_dev band max/min (floored at 1e-8)", hi / lo, 1.5));
  }

  const auto local = radial_local_data(H);
  double dmin = INFINITY, dmax = 0.0;
  for (const auto& rec : records) {
    dmin = std::min(dmin, rec.delta);
    dmax = std::max(dmax, rec.delta);
  }
  if (records.size() >= 4 && std::log10(dmax / dmin) >= 1.5) {
    const auto fit = fit_boundary_coefficient(records, alpha, local);
    r.details["boundary_fit"] = {{"estimate", fit.estimate},   {"reference", fit.reference},
                                 {"stderr", fit.stderr},       {"intercept", fit.intercept},
                                 {"rel_error", fit.rel_error}};
    if (fit.reference != 0.0) r.checks.push_back(check_le("boundary coefficient relative error", fit.rel_error, 0.10));
    else r.checks.push_back(check_le("|boundary coefficient| / |lambda1|", fit.rel_error, 0.05));
  } else {
    r.details["boundary_fit"] = "skipped: needs at least 4 records spanning 1.5 decades in delta";
  }
  return r;
}

inline SuiteResult suite_residual(const ExperimentConfig& cfg, const RunOptions& run) {
  SuiteResult r{.name = "residual"};
  const Alpha alpha(cfg.alpha);
  const LocalData local = cfg.h_spec.local(cfg.v0);
  const PolarGrid grid(cfg.grid.r_min, 1.0, cfg.grid.n_radial, cfg.grid.n_angular);
  const std::size_t n = cfg.u0_list.size();
  const auto reports = parallel_map<ResidualReport>(3 * n, run.jobs, [&](std::size_t j) {
    return pde_residual(alpha, local, cfg.u0_list[j / 3], int(j % 3), grid);
  });
  Table t{"residual", {"u0", "delta", "order", "residual", "radius", "angle"}, {}};
  std::array<std::vector<std::pair<double, double>>, 3> pairs;
  for (std::size_t j = 0; j < reports.size(); ++j) {
    const double u0 = cfg.u0_list[j / 3];
    const double delta = std::exp(-u0 / alpha.beta());
    t.rows.push_back({u0, delta, double(j % 3), reports[j].norm, reports[j].radius, reports[j].angle});
    pairs[j % 3].emplace_back(delta, reports[j].norm);
  }
  r.tables.push_back(std::move(t));

  const bool gradient = norm(local.grad) > 0.0;
  const bool curvature = local.laplacian != 0.0;
  if (n >= 4) {
    std::array<double, 3> slope{};
    for (int k = 0; k < 3; ++k) slope[k] = fit_scaling_exponent(pairs[k]).slope;
    r.details["slopes"] = slope;
    if (gradient) r.checks.push_back(check_ge("slope gain order 0 -> 1", slope[1] - slope[0], 0.8));
    if (curvature && !gradient) r.checks.push_back(check_ge("slope gain order 1 -> 2", slope[2] - slope[1], 0.4));
  } else {
    r.details["slopes"] = "skipped: needs at least 4 values of u0";
  }
  if (!gradient && !curvature) {
    double worst = 0.0;
    for (const auto& p : pairs[0]) worst = std::max(worst, p.second);
    r.checks.push_back(check_le("order-0 residual for exact bubble data", worst, 1e-6));
  }

  if (gradient) {
    const std::vector<double> deltas{1e-2, 1e-3, 1e-4, 1e-5};
    const auto fit = argmax_displacement(alpha, local, deltas);
    Table a{"argmax", {"delta", "argmax_radius"}, {}};
    for (std::size_t i = 0; i < fit.deltas.size(); ++i) a.rows.push_back({fit.deltas[i], fit.radii[i]});
    r.tables.push_back(std::move(a));
    r.checks.push_back(check_le("|argmax exponent - 1/(2alpha+1)|",
                                std::abs(fit.exponent - 1.0 / (2.0 * cfg.alpha + 1.0)), 0.05));
  }
  return r;
}

struct RunReport {
  std::vector<SuiteResult> suites;
  bool pass() const {
    return std::all_of(suites.begin(), suites.end(), [](const SuiteResult& s) { return s.pass(); });
  }
};

inline RunReport run_suite(const ExperimentConfig& cfg, const RunOptions& run = {}) {
  std::vector<std::string> names;
  if (cfg.suite == "all") names = {"constants", "modes", "gcheck", "family", "residual"};
  else names = {cfg.suite};
  RunReport report;
  for (const auto& name : names) {
    try {
      if (name == "constants") report.suites.push_back(suite_constants(cfg));
      else if (name == "modes") report.suites.push_back(suite_modes(cfg));
      else if (name == "gcheck") report.suites.push_back(suite_gcheck(cfg));
      else if (name == "family") report.suites.push_back(suite_family(cfg, run));
      else if (name == "residual") report.suites.push_back(suite_residual(cfg, run));
      else throw Error("unknown suite " + name);
    } catch (const Error& e) {
      SuiteResult failed{name};
      failed.error = e.what();
      report.suites.push_back(std::move(failed));
    }
  }
  return report;
}

inline nlohmann::json config_json(const ExperimentConfig& c) {
  return {{"suite", c.suite},
          {"alpha", c.alpha},
          {"v0", c.v0},
          {"h_spec", c.h_spec.text()},
          {"u0_list", c.u0_list},
          {"grid", {{"n_radial", c.grid.n_radial}, {"n_angular", c.grid.n_angular}, {"r_min", c.grid.r_min}}},
          {"output_dir", c.output_dir},
          {"seed", c.seed}};
}

inline nlohmann::json summary_json(const ExperimentConfig& cfg, const RunReport& report) {
  nlohmann::json suites = nlohmann::json::array();
  for (const auto& s : report.suites) {
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& c : s.checks)
      checks.push_back({{"name", c.name}, {"value", c.value}, {"threshold", c.threshold},
                        {"comparison", c.comparison}, {"pass", c.pass}});
    nlohmann::json tables = nlohmann::json::array();
    for (const auto& t : s.tables) tables.push_back(t.name + ".csv");
    nlohmann::json entry{{"name", s.name}, {"pass", s.pass()}, {"checks", checks},
                         {"tables", tables}, {"details", s.details}};
    if (!s.error.empty()) entry["error"] = s.error;
    suites.push_back(entry);
  }
  return {{"config", config_json(cfg)}, {"pass", report.pass()}, {"suites", suites}};
}

// Writes <dir>/<table>.csv for every table and <dir>/summary.json.
inline void write_report(const ExperimentConfig& cfg, const RunReport& report,
                         const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& s : report.suites)
    for (const auto& t : s.tables) {
      std::ofstream f(dir / (t.name + ".csv"), std::ios::binary);
      if (!f) throw Error("cannot write " + (dir / (t.name + ".csv")).string());
      f << t.csv();
    }
  std::ofstream f(dir / "summary.json", std::ios::binary);
  if (!f) throw Error("cannot write " + (dir / "summary.json").string());
  f << summary_json(cfg, report).dump(2) << "\n";
}

}  // namespace liouville
