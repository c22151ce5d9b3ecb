#pragma once

// Radial blowup sequences obtained by sweeping u(0), and the diagnostics
// measured on them in blown-up variables v(ρ) = u(δρ) - u(0).

#include <algorithm>
#include <cmath>
#include <future>
#include <string>
#include <vector>

#include "liouville/closed_forms.hpp"
#include "liouville/common.hpp"
#include "liouville/linearized_modes.hpp"
#include "liouville/ode_engine.hpp"
#include "liouville/regression.hpp"

namespace liouville {

struct FamilyRecord {
  double u0;
  double delta;          // exp(-u0 / (2 + 2α))
  double mass;           // ∫_{B_R} |x|^{2α} H e^u
  double sup_dev;        // sup |v - U| over the blown-up disk
  double d_boundary;     // (v - U - φ - c) at ρ = R/δ
  double argmax_radius;  // radius of the maximum of u
  double flux_mass;
  double max_residual;
};

struct FamilyOptions {
  ShootOptions shoot{1e-10, ShootingForm::deviation, 800, true};
  unsigned jobs = 1;
};

// Local data of V(x) = H(|x|) at the origin. A radial H with H'(0) != 0 is
// not differentiable at 0 and is rejected.
inline LocalData radial_local_data(const RadialFunction& H) {
  if (std::abs(H.d1(0.0)) > 1e-14)
    throw Error("radial coefficient must have H'(0) = 0 to be smooth at the origin");
  const double h2 = H.d2(0.0);
  return LocalData::make(H(0.0), {}, Sym2{h2, 0.0, h2});
}

inline FamilyRecord measure_family_member(const Alpha& alpha, const RadialFunction& H, double u0,
                                          double R, const FamilyOptions& options = {}) {
  try {
    const auto sol = shoot_liouville(alpha, H, u0, R, options.shoot);
    const LocalData local = radial_local_data(H);
    const BubbleParams p = BubbleParams::make(alpha, local.v0, u0);
    const double rho_max = R / sol.delta;

    double sup_dev = 0.0;
    for (double d : sol.deviation.values()) sup_dev = std::max(sup_dev, std::abs(d));

    const Vec2 edge{rho_max, 0.0};
    const double phi = eval_phi(local, p, edge);
    const auto c = build_correction_c(alpha, local, p, rho_max);
    const double d_boundary = sol.deviation.values().back() - phi - c(edge);

    double argmax = 0.0;
    double best = u0;
    for (std::size_t i = 0; i < sol.u.size(); ++i)
      if (sol.u.values()[i] > best) {
        best = sol.u.values()[i];
        argmax = sol.u.nodes()[i];
      }
    return {u0, sol.delta, sol.mass, sup_dev, d_boundary, argmax, sol.flux_mass, sol.max_residual};
  } catch (const Error& e) {
    throw Error("family member u0 = " + std::to_string(u0) + ": " + e.what());
  }
}

// Runs `fn(i)` for i in [0, n) on up to `jobs` threads; results keep index order.
template <class T, class F>
std::vector<T> parallel_map(std::size_t n, unsigned jobs, F&& fn) {
  std::vector<T> out;
  out.reserve(n);
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) out.push_back(fn(i));
    return out;
  }
  std::vector<std::future<T>> futures(n);
  std::size_t launched = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (; launched < n && launched < i + jobs; ++launched)
      futures[launched] = std::async(std::launch::async, fn, launched);
    out.push_back(futures[i].get());
  }
  return out;
}

inline std::vector<FamilyRecord> run_family(const Alpha& alpha, const RadialFunction& H,
                                            const std::vector<double>& u0_list, double R = 1.0,
                                            const FamilyOptions& options = {}) {
  if (u0_list.empty()) throw Error("run_family: u0 list is empty");
  for (std::size_t i = 1; i < u0_list.size(); ++i)
    if (!(u0_list[i] > u0_list[i - 1])) throw Error("run_family: u0 list must be increasing");
  return parallel_map<FamilyRecord>(u0_list.size(), options.jobs, [&](std::size_t i) {
    return measure_family_member(alpha, H, u0_list[i], R, options);
  });
}

struct BoundaryFit {
  double estimate;   // coefficient of δ^2 log(1/δ)
  double intercept;  // coefficient of δ^2
  double stderr;
  double reference;  // Λ1 ΔV(0) + Λ2 |∇V(0)|^2
  double rel_error;  // |estimate - reference| / |reference|, or |estimate| / |Λ1| when the reference vanishes
};

// Fits d_boundary = A δ^2 log(1/δ) + B δ^2. Rows are weighted by δ^{-2},
// which turns the fit into a line in log(1/δ) for d_boundary / δ^2.
inline BoundaryFit fit_boundary_coefficient(const std::vector<FamilyRecord>& records,
                                            const Alpha& alpha, const LocalData& local) {
  if (records.size() < 4) throw Error("fit_boundary_coefficient: need at least 4 records");
  std::vector<double> x, y;
  double lo = INFINITY, hi = 0.0;
  for (const auto& r : records) {
    x.push_back(std::log(1.0 / r.delta));
    y.push_back(r.d_boundary / (r.delta * r.delta));
    lo = std::min(lo, r.delta);
    hi = std::max(hi, r.delta);
  }
  auto sorted = x;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw Error("fit_boundary_coefficient: records must have distinct scales");
  if (std::log10(hi / lo) < 1.5)
    throw Error("fit_boundary_coefficient: scales span less than 1.5 decades; basis is ill-conditioned");
  const auto f = fit_line(x, y);
  const auto c = expansion_coefficients(alpha, local.v0);
  const double reference = c.lambda1 * local.laplacian + c.lambda2 * dot(local.grad, local.grad);
  const double rel = reference != 0.0 ? std::abs(f.slope - reference) / std::abs(reference)
                                      : std::abs(f.slope) / std::abs(c.lambda1);
  return {f.slope, f.intercept, f.stderr_slope, reference, rel};
}

}  // namespace liouville
