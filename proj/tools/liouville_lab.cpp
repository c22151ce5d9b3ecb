// Command-line front end: batch experiments, constants and the acceptance run.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "liouville/experiments.hpp"
#include "liouville/verification.hpp"

namespace {

constexpr int exit_pass = 0;
constexpr int exit_threshold = 1;
constexpr int exit_usage = 2;

struct GlobalOptions {
  std::string out;
  long long seed = -1;
  unsigned jobs = 1;
};

int cmd_run(const std::string& path, const GlobalOptions& g) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::cerr << "error: cannot read config " << path << "\n";
    return exit_usage;
  }
  std::stringstream buf;
  buf << in.rdbuf();
  auto parsed = liouville::parse_config(buf.str());
  if (!parsed.config) {
    std::cerr << "error: invalid config " << path << "\n";
    for (const auto& v : parsed.violations) std::cerr << "  - " << v << "\n";
    return exit_usage;
  }
  auto cfg = *parsed.config;
  if (!g.out.empty()) cfg.output_dir = g.out;
  if (g.seed >= 0) cfg.seed = std::uint64_t(g.seed);

  const auto report = liouville::run_suite(cfg, {std::max(1u, g.jobs)});
  try {
    liouville::write_report(cfg, report, cfg.output_dir);
  } catch (const liouville::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_usage;
  }
  for (const auto& s : report.suites) {
    std::printf("%s %s\n", s.pass() ? "PASS" : "FAIL", s.name.c_str());
    if (!s.error.empty()) std::printf("  error: %s\n", s.error.c_str());
    for (const auto& c : s.checks)
      std::printf("  [%s] %s: %.6g %s %.6g\n", c.pass ? "ok" : "FAIL", c.name.c_str(), c.value,
                  c.comparison.c_str(), c.threshold);
  }
  std::printf("reports written to %s\n", cfg.output_dir.c_str());
  return report.pass() ? exit_pass : exit_threshold;
}

int cmd_constants(double alpha_value, double v0, const GlobalOptions& g) {
  try {
    const liouville::Alpha alpha(alpha_value);
    if (!(v0 > 0.0)) throw liouville::Error("v0 must be positive");
    liouville::ExperimentConfig cfg;
    cfg.suite = "constants";
    cfg.alpha = alpha_value;
    cfg.v0 = v0;
    const auto result = liouville::suite_constants(cfg);
    const auto csv = result.tables.front().csv();
    std::fputs(csv.c_str(), stdout);
    if (!g.out.empty()) {
      liouville::RunReport report{{result}};
      liouville::write_report(cfg, report, g.out);
    }
    return result.pass() ? exit_pass : exit_threshold;
  } catch (const liouville::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_usage;
  }
}

int cmd_verify(const std::string& only, const GlobalOptions& g) {
  bool all_pass = true;
  bool matched = false;
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& c : liouville::acceptance_criteria()) {
    if (!only.empty() && c.id != only) continue;
    matched = true;
    const auto r = liouville::run_criterion(c);
    std::printf("%s\n", liouville::format_result(r).c_str());
    std::fflush(stdout);
    all_pass = all_pass && r.pass;
    rows.push_back({{"id", r.id}, {"title", r.title}, {"pass", r.pass}, {"detail", r.detail},
                    {"seconds", r.seconds}, {"budget_seconds", r.budget}});
  }
  if (!matched) {
    std::cerr << "error: unknown criterion '" << only << "'\n";
    return exit_usage;
  }
  if (!g.out.empty()) {
    std::filesystem::create_directories(g.out);
    std::ofstream f(std::filesystem::path(g.out) / "verify.json", std::ios::binary);
    f << nlohmann::json{{"pass", all_pass}, {"criteria", rows}}.dump(2) << "\n";
  }
  return all_pass ? exit_pass : exit_threshold;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Blowup solutions of the singular Liouville equation: experiments and checks"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalOptions g;
  app.add_option("--out", g.out, "Output directory for tables and summaries");
  app.add_option("--seed", g.seed, "Seed for randomized property sampling")->check(CLI::NonNegativeNumber);
  app.add_option("--jobs", g.jobs, "Worker threads for independent experiments")->check(CLI::PositiveNumber);

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run the experiment suite named in a config file");
  run->add_option("--config", config_path, "JSON config")->required();

  double alpha = 0.0, v0 = 0.0;
  auto* constants = app.add_subcommand("constants", "Print the second-order expansion constants");
  constants->add_option("--alpha", alpha, "Singularity order (non-integer, positive)")->required();
  constants->add_option("--v0", v0, "V(0) > 0")->required();

  std::string criterion;
  auto* verify = app.add_subcommand("verify", "Run the acceptance checks");
  verify->add_option("--criterion", criterion, "Run only this criterion (1..9, 7a, 7b)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_usage;
  }

  if (*run) return cmd_run(config_path, g);
  if (*constants) return cmd_constants(alpha, v0, g);
  if (*verify) return cmd_verify(criterion, g);
  return exit_usage;
}
