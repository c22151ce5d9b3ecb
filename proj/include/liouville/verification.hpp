#pragma once

// Acceptance checks with pinned tolerances and runtime budgets. Each check is
// self-contained and reports one line.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "liouville/blowup_family.hpp"
#include "liouville/closed_forms.hpp"
#include "liouville/expansion_verify.hpp"
#include "liouville/experiments.hpp"
#include "liouville/linearized_modes.hpp"

namespace liouville {

struct CriterionResult {
  std::string id;
  std::string title;
  bool pass = false;
  std::string detail{};
  double seconds = 0.0;
  double budget = 0.0;
};

namespace detail {

inline std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// |Σ terms| / max(1, Σ |terms|) for the radial operator u'' + u'/r + q u - s
// with u'' from a 4th-order difference of the exact first derivative.
template <class Deriv>
double scaled_operator_residual(Deriv&& deriv, double value, double r, double q, double s) {
  const double h = 1e-3 * r;
  const double d2 = (deriv(r - 2 * h) - 8 * deriv(r - h) + 8 * deriv(r + h) - deriv(r + 2 * h)) / (12 * h);
  const double d1 = deriv(r);
  const double terms[] = {d2, d1 / r, q * value, -s};
  double sum = 0.0, scale = 0.0;
  for (double t : terms) {
    sum += t;
    scale += std::abs(t);
  }
  return std::abs(sum) / std::max(1.0, scale);
}

}  // namespace detail

struct ClosedFormResiduals {
  double g;
  double kernel;
  double fundamentals;
  double wronskian;  // relative
};

// Residuals of the closed forms in their ODEs on r, s in [1e-2, 1e2].
inline ClosedFormResiduals closed_form_residuals(const std::vector<double>& alphas, double v0) {
  ClosedFormResiduals out{0, 0, 0, 0};
  const auto grid = log_grid(1e-2, 1e2, 161);
  for (double av : alphas) {
    const Alpha alpha(av);
    for (double r : grid) {
      const double weight = hessian_radial_factor(alpha, v0, r) / (r * r);  // r^{2α} e^U
      const auto g = eval_g(alpha, v0, r);
      out.g = std::max(out.g, detail::scaled_operator_residual(
                                  [&](double x) { return eval_g(alpha, v0, x).deriv; }, g.value, r,
                                  v0 * weight - 1.0 / (r * r), -r * weight));
      const auto f = eval_radial_kernel(alpha, v0, r);
      out.kernel = std::max(out.kernel, detail::scaled_operator_residual(
                                            [&](double x) { return eval_radial_kernel(alpha, v0, x).deriv; },
                                            f.value, r, v0 * weight, 0.0));
    }
    std::vector<double> indices{alpha.mode_index(1), alpha.mode_index(2), alpha.mode_index(3)};
    for (double d : indices) {
      if (std::abs(d - 1.0) < Alpha::default_guard) continue;
      for (double s : grid) {
        const double q = 8.0 / ((1 + s * s) * (1 + s * s)) - d * d / (s * s);
        const auto m = eval_mode_fundamentals(d, s);
        out.fundamentals = std::max(
            out.fundamentals,
            detail::scaled_operator_residual([&](double x) { return eval_mode_fundamentals(d, x).df11; },
                                             m.f11, s, q, 0.0));
        out.fundamentals = std::max(
            out.fundamentals,
            detail::scaled_operator_residual([&](double x) { return eval_mode_fundamentals(d, x).df12; },
                                             m.f12, s, q, 0.0));
      }
    }
    const double d = alpha.mode_index(2);
    const double inv_m = 1.0 / (1.0 + av);
    for (double s : grid) {
      const auto m = eval_mode_fundamentals(d, s);
      const double numeric = m.f11 * m.df12 - m.df11 * m.f12;
      const double closed = 4.0 * inv_m * (1.0 - 4.0 * inv_m * inv_m) / s;
      out.wronskian = std::max(out.wronskian, std::abs(numeric - closed) / std::abs(closed));
    }
  }
  return out;
}

// Λ1 evaluated in 50-digit arithmetic, independent of the double path.
inline double lambda1_extended(double alpha, double v0) {
  using F = boost::multiprecision::cpp_bin_float_50;
  const F m = F(1) + F(alpha);
  const F pi = boost::math::constants::pi<F>();
  const F l1 = -pi / (F(v0) * sin(pi / m) * m) * pow(F(8) * m * m / F(v0), F(1) / m);
  return l1.convert_to<double>();
}

inline CriterionResult criterion_constants() {
  CriterionResult r{.id = "1", .title = "constants identity and reference value"};
  r.budget = 1.0;
  const double defect = constants_identity_defect(20240101, 1000);
  const double l1 = expansion_coefficients(Alpha(0.5), 18.0).lambda1;
  const double oracle = lambda1_extended(0.5, 18.0);
  r.pass = defect <= 1e-12 && std::abs(l1 - oracle) <= 1e-6;
  r.detail = detail::fmt("max |L2 v0 + L1|/|L1| = %.2e (<= 1e-12); L1(0.5, 18) = %.10f, 50-digit oracle %.10f (+- 1e-6)",
                         defect, l1, oracle);
  return r;
}

inline CriterionResult criterion_closed_forms() {
  CriterionResult r{.id = "2", .title = "closed-form residuals"};
  r.budget = 5.0;
  const auto res = closed_form_residuals({0.3, 0.5, 1.5, 2.5}, 18.0);
  r.pass = res.g <= 1e-8 && res.kernel <= 1e-8 && res.fundamentals <= 1e-6 && res.wronskian <= 1e-10;
  r.detail = detail::fmt("g %.2e (<=1e-8), kernel %.2e (<=1e-8), pair %.2e (<=1e-6), Wronskian %.2e (<=1e-10)",
                         res.g, res.kernel, res.fundamentals, res.wronskian);
  return r;
}

inline CriterionResult criterion_kernel_triviality() {
  CriterionResult r{.id = "3", .title = "bounded kernel is trivial"};
  r.budget = 30.0;
  r.pass = true;
  double worst = 0.0;
  for (double a : {0.5, 1.5, 2.5}) {
    const auto rep = kernel_triviality_report(Alpha(a), 18.0, 3);
    for (const auto& m : rep.modes) {
      const double dev = std::abs(m.exponent_at_infinity - m.k) / m.k;
      worst = std::max(worst, dev);
      r.pass = r.pass && m.certified && dev <= 0.05;
    }
  }
  r.detail = detail::fmt("max |exponent - k|/k = %.2e over alpha {0.5,1.5,2.5}, k {1,2,3} (<= 0.05)", worst);
  return r;
}

inline CriterionResult criterion_mass() {
  CriterionResult r{.id = "4", .title = "mass quantization"};
  r.budget = 30.0;
  const auto rec = run_family(Alpha(0.5), RadialFunction::constant(18.0), {30.0});
  const double quantum = 12.0 * std::numbers::pi;
  const double rel = std::abs(rec.back().mass - quantum) / quantum;
  r.pass = rel <= 0.01;
  r.detail = detail::fmt("mass %.8f vs 12pi = %.8f, relative error %.2e (<= 1e-2)", rec.back().mass, quantum, rel);
  return r;
}

inline CriterionResult criterion_bounded_deviation() {
  CriterionResult r{.id = "5", .title = "blown-up deviation stays in a band"};
  r.budget = 60.0;
  const std::vector<double> u0s{10, 15, 20, 25, 30};
  const auto flat = run_family(Alpha(0.5), RadialFunction::constant(18.0), u0s);
  double lo = INFINITY, hi = 0.0, raw = 0.0;
  for (const auto& rec : flat) {
    raw = std::max(raw, rec.sup_dev);
    const double s = std::max(rec.sup_dev, deviation_floor);
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  // Same sweep with a non-constant coefficient, where the deviation is nonzero.
  const auto curved = run_family(Alpha(0.5), RadialFunction::quadratic(18.0, 1.0), u0s);
  bool non_increasing = true;
  for (std::size_t i = 1; i < curved.size(); ++i)
    non_increasing = non_increasing && curved[i].sup_dev <= curved[i - 1].sup_dev * (1 + 1e-9);
  r.pass = hi / lo <= 1.5 && non_increasing;
  r.detail = detail::fmt(
      "H=18: raw max sup|v-U| %.2e, band max/min %.3f at floor 1e-8 (<= 1.5); H=18+r^2: sup|v-U| %.2e -> %.2e %s",
      raw, hi / lo, curved.front().sup_dev, curved.back().sup_dev,
      non_increasing ? "non-increasing" : "NOT non-increasing");
  return r;
}

inline CriterionResult criterion_boundary_coefficient() {
  CriterionResult r{.id = "6", .title = "boundary coefficient of the second-order remainder"};
  r.budget = 180.0;
  const Alpha alpha(0.5);
  const auto H = RadialFunction::quadratic(18.0, 1.0);
  const auto rec = run_family(alpha, H, {16, 20, 24, 28});
  const auto fit = fit_boundary_coefficient(rec, alpha, radial_local_data(H));
  r.pass = fit.rel_error <= 0.10;
  r.detail = detail::fmt("estimate %.6f +- %.1e vs L1*LapV = %.6f, relative error %.2e (<= 0.10)", fit.estimate,
                         fit.stderr, fit.reference, fit.rel_error);
  return r;
}

// Residual slopes of orders 0, 1, 2 over u0 in {16, 20, 24, 28}.
inline std::array<double, 3> residual_slopes(const Alpha& alpha, const LocalData& local) {
  const PolarGrid grid(1e-6, 1.0, 8000, 64);
  const std::vector<double> u0s{16, 20, 24, 28};
  const unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
  const auto reports = parallel_map<ResidualReport>(12, jobs, [&](std::size_t j) {
    return pde_residual(alpha, local, u0s[j / 3], int(j % 3), grid);
  });
  std::array<std::vector<std::pair<double, double>>, 3> pairs;
  for (std::size_t j = 0; j < reports.size(); ++j)
    pairs[j % 3].emplace_back(std::exp(-u0s[j / 3] / alpha.beta()), reports[j].norm);
  return {fit_scaling_exponent(pairs[0]).slope, fit_scaling_exponent(pairs[1]).slope,
          fit_scaling_exponent(pairs[2]).slope};
}

inline CriterionResult criterion_residual_gradient() {
  CriterionResult r{.id = "7a", .title = "first-order term improves residual scaling (gradient data)"};
  r.budget = 90.0;
  const auto s = residual_slopes(Alpha(0.5), LocalData::make(18.0, {1.0, 0.0}));
  r.pass = s[1] - s[0] >= 0.8;
  r.detail = detail::fmt("slopes %.4f, %.4f, %.4f; gain 0->1 = %.4f (>= 0.8)", s[0], s[1], s[2], s[1] - s[0]);
  return r;
}

inline CriterionResult criterion_residual_curvature() {
  CriterionResult r{.id = "7b", .title = "second-order term improves residual scaling (Laplacian data)"};
  r.budget = 90.0;
  const auto s = residual_slopes(Alpha(0.5), LocalData::make(18.0, {}, Sym2{1.0, 0.0, 1.0}));
  r.pass = s[2] - s[1] >= 0.4;
  r.detail = detail::fmt("slopes %.4f, %.4f, %.4f; gain 1->2 = %.4f (>= 0.4)", s[0], s[1], s[2], s[2] - s[1]);
  return r;
}

inline CriterionResult criterion_displacement() {
  CriterionResult r{.id = "8", .title = "maximizer displacement exponent"};
  r.budget = 10.0;
  r.pass = true;
  std::string parts;
  for (double a : {0.5, 1.5}) {
    const auto fit = argmax_displacement(Alpha(a), LocalData::make(18.0, {1.0, 0.0}), {1e-2, 1e-3, 1e-4, 1e-5});
    const double target = 1.0 / (2.0 * a + 1.0);
    r.pass = r.pass && std::abs(fit.exponent - target) <= 0.05;
    parts += detail::fmt("alpha %.1f: %.4f vs %.4f; ", a, fit.exponent, target);
  }
  r.detail = parts + "tolerance 0.05";
  return r;
}

inline CriterionResult criterion_correction() {
  CriterionResult r{.id = "9", .title = "second-order correction: residual and envelope"};
  r.budget = 60.0;
  const Alpha alpha(0.5);
  const double delta = 1e-2;
  const auto p = BubbleParams::with_scale(alpha, 18.0, delta);
  r.pass = true;
  double worst_res = 0.0, worst_shift = 0.0, worst_env = 0.0;
  for (const auto& local : {LocalData::make(18.0, {}, Sym2{1.0, 0.0, -1.0}),
                            LocalData::make(18.0, {0.6, 0.8}, Sym2{1.0, 0.3, -0.5})}) {
    const auto c1 = build_correction_c(alpha, local, p, 1.0 / delta);
    const auto c2 = build_correction_c(alpha, local, p, 2.0 / delta);
    worst_res = std::max(worst_res, c1.mode_residual() / (delta * delta));
    for (std::size_t i = 0; i < c1.pieces().size(); ++i) {
      const double e1 = c1.pieces()[i].envelope_constant;
      const double e2 = c2.pieces()[i].envelope_constant;
      worst_env = std::max(worst_env, e1);
      r.pass = r.pass && std::isfinite(e1) && std::isfinite(e2);
      worst_shift = std::max(worst_shift, std::abs(e2 - e1) / e1);
    }
  }
  r.pass = r.pass && worst_res <= 1e-6 && worst_shift <= 0.10;
  r.detail = detail::fmt("mode residual / delta^2 = %.2e (<= 1e-6); envelope C <= %.4f, change under R doubling %.2e (<= 0.10)",
                         worst_res, worst_env, worst_shift);
  return r;
}

struct Criterion {
  std::string id;
  std::function<CriterionResult()> run;
};

inline const std::vector<Criterion>& acceptance_criteria() {
  static const std::vector<Criterion> all{
      {"1", criterion_constants},           {"2", criterion_closed_forms},
      {"3", criterion_kernel_triviality},   {"4", criterion_mass},
      {"5", criterion_bounded_deviation},   {"6", criterion_boundary_coefficient},
      {"7a", criterion_residual_gradient},  {"7b", criterion_residual_curvature},
      {"8", criterion_displacement},        {"9", criterion_correction}};
  return all;
}

// Runs one criterion, timing it and folding the runtime budget into the verdict.
inline CriterionResult run_criterion(const Criterion& c) {
  const auto t0 = std::chrono::steady_clock::now();
  CriterionResult r;
  try {
    r = c.run();
  } catch (const std::exception& e) {
    r.id = c.id;
    r.title = "error";
    r.pass = false;
    r.detail = e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (r.budget > 0.0 && r.seconds > r.budget) {
    r.pass = false;
    r.detail += detail::fmt(" [runtime %.1f s exceeds %.0f s]", r.seconds, r.budget);
  }
  return r;
}

inline std::string format_result(const CriterionResult& r) {
  return detail::fmt("[%s] criterion %-3s %-58s %6.2fs  %s", r.pass ? "PASS" : "FAIL", r.id.c_str(),
                     r.title.c_str(), r.seconds, r.detail.c_str());
}

}  // namespace liouville
