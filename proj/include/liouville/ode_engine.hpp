#pragma once

// Radial ODE machinery:
//   * second-order radial equations  u'' + u'/r + q(r) u = s(r)  with a
//     regular singular point at r = 0, started from two-term Frobenius series;
//   * the radial singular Liouville shooting problem
//         u'' + u'/r + r^{2α} H(r) e^u = 0,  u(0) = u0;
//   * variation of parameters for the mode equations in the s variable,
//     built on the explicit fundamental pairs.
// All integrations run in the log-radius t = log r, where the coefficients
// are smooth.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "liouville/closed_forms.hpp"
#include "liouville/common.hpp"
#include "liouville/integrator.hpp"
#include "liouville/profile.hpp"

namespace liouville {

// u'' + u'/r + q(r) u = s(r) on (0, r_max]; near r = 0, r^2 q(r) -> -nu^2.
struct ModeProblem {
  int k = 0;
  double nu = 0.0;
  RadialFn potential;      // q(r)
  RadialFn forcing;        // s(r); empty means zero
  double r_max = 1.0;
  double r_min = 1e-4;     // startup radius for outward runs, end point for inward runs
  RadialFn perturbation;   // optional r^2 q(r) + nu^2 evaluated without cancellation

  double r2q(double r) const { return perturbation ? perturbation(r) - nu * nu : r * r * potential(r); }
  double perturbation_at(double r) const {
    return perturbation ? perturbation(r) : r * r * potential(r) + nu * nu;
  }
  double r2s(double r) const { return forcing ? r * r * forcing(r) : 0.0; }

  // Angular mode k of the operator linearized at the bubble:
  // q(r) = r^{2α} v0 e^{U(r)} - k^2/r^2. With `with_bubble` false the bubble
  // term is dropped, leaving the Euler equation.
  static ModeProblem liouville_mode(const Alpha& alpha, double v0, int k, double r_min,
                                    double r_max, bool with_bubble = true) {
    const double beta = alpha.beta();
    const double log_a = std::log(bubble_coefficient(alpha, v0));
    const double log_v0 = std::log(v0);
    auto bubble_part = [=](double r) {
      if (!with_bubble || r <= 0.0) return 0.0;
      const double lr = std::log(r);
      return std::exp(log_v0 + beta * lr - 2.0 * detail::softplus(log_a + beta * lr));
    };
    ModeProblem p;
    p.k = k;
    p.nu = k;
    p.potential = [=](double r) { return bubble_part(r) / (r * r) - double(k * k) / (r * r); };
    p.perturbation = bubble_part;
    p.r_min = r_min;
    p.r_max = r_max;
    return p;
  }
};

enum class Direction { outward, inward };
enum class Seed { regular, decaying };

struct SingularOptions {
  std::vector<double> nodes;           // output radii; default: 400 log-spaced
  double homogeneous_amplitude = 1.0;  // 0 gives the pure particular solution
};

namespace detail {

// Local power-law exponent of f between r and r*ratio; nullopt when f
// vanishes or changes sign there.
inline std::optional<double> local_power(const RadialFn& f, double r, double ratio) {
  const double a = f(r);
  const double b = f(r * ratio);
  if (a == 0.0 || b == 0.0 || (a > 0) != (b > 0)) return std::nullopt;
  return std::log(b / a) / std::log(ratio);
}

// Two-term series data at the startup radius: the homogeneous solution
// r^e (1 + κ (r/r_s)^σ) and the particular solution A (r/r_s)^τ.
struct FrobeniusStart {
  double u = 0.0;
  double w = 0.0;  // r u'
  double kappa = 0.0;
  double sigma = 0.0;
};

inline FrobeniusStart frobenius_start(const ModeProblem& p, Direction dir, Seed seed, double r_s,
                                      double amplitude) {
  const double e = seed == Seed::regular ? p.nu : -p.nu;
  const double ratio = dir == Direction::outward ? 0.5 : 2.0;
  FrobeniusStart out;

  if (amplitude != 0.0) {
    const double P = p.perturbation_at(r_s);
    RadialFn pert = [&p](double r) { return p.perturbation_at(r); };
    if (auto sigma = local_power(pert, r_s, ratio); sigma && std::abs(*sigma) > 1e-8) {
      const double denom = *sigma * (2.0 * e + *sigma);
      if (std::abs(denom) > 1e-10) {
        out.kappa = -P / denom;
        out.sigma = *sigma;
      }
    }
    if (std::abs(out.kappa) > 1e-2)
      throw Error("Frobenius startup radius " + std::to_string(r_s) +
                  " is too far from the singular point (series correction " +
                  std::to_string(out.kappa) + ")");
    const double base = std::pow(r_s, e);
    out.u = amplitude * base * (1.0 + out.kappa);
    out.w = amplitude * base * (e + out.kappa * (e + out.sigma));
  }

  if (p.forcing) {
    RadialFn r2s = [&p](double r) { return p.r2s(r); };
    const double S = r2s(r_s);
    if (S != 0.0) {
      auto tau = local_power(r2s, r_s, ratio);
      if (!tau) throw Error("forcing has no power-law behaviour near the startup radius");
      const double denom = *tau * *tau - p.nu * p.nu;
      if (std::abs(denom) < 1e-6)
        throw Error("forcing resonates with the homogeneous solutions at the startup radius");
      const double up = S / denom;
      out.u += up;
      out.w += *tau * up;
    }
  }
  return out;
}

}  // namespace detail

// Integrates a mode problem from its regular singular end. Outward runs start
// at r_min with the regular (r^nu) or decaying (r^-nu) series; inward runs
// start at r_max. The forcing's particular series is added to the seed.
inline RadialProfile integrate_singular(const ModeProblem& problem, Direction direction,
                                        Seed seed, double tol = 1e-10,
                                        const SingularOptions& options = {}) {
  if (!(tol >= 1e-13 && tol <= 1e-6)) throw Error("integrate_singular: tol must lie in [1e-13, 1e-6]");
  if (!(problem.r_min > 0.0) || !(problem.r_max > problem.r_min))
    throw Error("integrate_singular: need 0 < r_min < r_max");
  if (!problem.potential) throw Error("integrate_singular: potential is required");

  std::vector<double> nodes =
      options.nodes.empty() ? log_grid(problem.r_min, problem.r_max, 400) : options.nodes;
  if (!std::is_sorted(nodes.begin(), nodes.end()) || nodes.front() < problem.r_min * (1 - 1e-12) ||
      nodes.back() > problem.r_max * (1 + 1e-12))
    throw Error("integrate_singular: nodes must be sorted and inside [r_min, r_max]");

  const bool outward = direction == Direction::outward;
  const double r_s = outward ? problem.r_min : problem.r_max;
  const auto start =
      detail::frobenius_start(problem, direction, seed, r_s, options.homogeneous_amplitude);

  ProfileMeta meta{std::nullopt, problem.r_min, problem.r_max, "r"};
  if (start.u == 0.0 && start.w == 0.0) {
    return RadialProfile(nodes, std::vector<double>(nodes.size(), 0.0),
                         std::vector<double>(nodes.size(), 0.0), meta);
  }

  std::vector<double> ts(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) ts[i] = std::log(nodes[i]);
  if (!outward) std::reverse(ts.begin(), ts.end());

  auto rhs = [&problem](const detail::State<2>& y, detail::State<2>& dy, double t) {
    const double r = std::exp(t);
    dy[0] = y[1];
    dy[1] = problem.r2s(r) - problem.r2q(r) * y[0];
  };
  detail::StepLimits limits;
  limits.rel_tol = tol;
  limits.abs_tol = tol * 1e-6 * std::max(std::abs(start.u), std::abs(start.w));
  auto run = detail::integrate_dense<2>(rhs, {start.u, start.w}, std::log(r_s), ts, limits);

  std::vector<double> values(nodes.size());
  std::vector<double> derivs(nodes.size());
  for (std::size_t i = 0; i < run.times.size(); ++i) {
    const std::size_t j = outward ? i : nodes.size() - 1 - i;
    values[j] = run.states[i][0];
    derivs[j] = run.states[i][1] / nodes[j];
  }
  return RadialProfile(std::move(nodes), std::move(values), std::move(derivs), meta);
}

// ---------------------------------------------------------------------------
// Radial singular Liouville shooting.

enum class ShootingForm {
  direct,     // integrates u itself
  deviation,  // integrates d = v - U in the blown-up radius, v(ρ) = u(δρ) - u0
};

struct ShootOptions {
  double tol = 1e-10;
  ShootingForm form = ShootingForm::direct;
  std::size_t nodes = 800;
  bool check_residual = true;
};

struct LiouvilleSolution {
  RadialProfile u;          // u and u' in r on [r_match, R]
  RadialProfile deviation;  // d(ρ) = u(δρ) - u0 - U(ρ), U the bubble with v0 = H(0)
  double u0;
  double delta;
  double r_match;
  double mass;       // ∫_{B_R} |x|^{2α} H e^u, accumulated along the integration
  double flux_mass;  // -2π R u'(R), equal to the mass for a true solution
  double max_residual;
  double residual_radius;
};

namespace detail {

// Defect of the integral form y(t1) - y(t0) = ∫ y' over every cell of a
// uniform verification grid in log-radius (Simpson rule on dense output),
// scaled by max(1, |y|). Returns (max defect, radius of the max).
template <std::size_t N, class Rhs>
std::pair<double, double> integral_defect(Rhs&& rhs, const DenseRun<N>& run) {
  double worst = 0.0;
  double where = std::exp(run.times.front());
  State<N> f0{}, f1{}, fm{};
  for (std::size_t j = 0; j + 2 < run.times.size(); j += 2) {
    const double h = run.times[j + 2] - run.times[j];
    rhs(run.states[j], f0, run.times[j]);
    rhs(run.states[j + 1], fm, run.times[j + 1]);
    rhs(run.states[j + 2], f1, run.times[j + 2]);
    for (std::size_t c = 0; c < N; ++c) {
      const double integral = h / 6.0 * (f0[c] + 4.0 * fm[c] + f1[c]);
      const double scale = std::max({1.0, std::abs(run.states[j][c]), std::abs(run.states[j + 2][c])});
      const double defect = std::abs(run.states[j + 2][c] - run.states[j][c] - integral) / scale;
      if (defect > worst) {
        worst = defect;
        where = std::exp(run.times[j + 1]);
      }
    }
  }
  return {worst, where};
}

inline std::vector<double> uniform_with_nodes(double t0, double t1, double spacing,
                                              std::size_t* n_out) {
  const std::size_t cells = std::max<std::size_t>(2, std::size_t(std::ceil(std::abs(t1 - t0) / spacing)));
  const std::size_t n = 2 * (cells / 2 + 1) + 1;  // odd count for Simpson pairs
  std::vector<double> ts(n);
  for (std::size_t i = 0; i < n; ++i) ts[i] = t0 + (t1 - t0) * double(i) / double(n - 1);
  ts.back() = t1;
  if (n_out) *n_out = n;
  return ts;
}

}  // namespace detail

inline LiouvilleSolution shoot_liouville(const Alpha& alpha, const RadialFunction& H, double u0,
                                         double R, const ShootOptions& options = {}) {
  const double beta = alpha.beta();
  const double tol = options.tol;
  if (!(tol >= 1e-13 && tol <= 1e-6)) throw Error("shoot_liouville: tol must lie in [1e-13, 1e-6]");
  if (!(R > 0.0)) throw Error("shoot_liouville: R must be positive");
  if (u0 > 30.0 * (1.0 + alpha.value()))
    throw Error("shoot_liouville: u0 exceeds the overflow budget 30(1+alpha)");
  if (options.nodes < 4) throw Error("shoot_liouville: need at least 4 output nodes");

  const double H0 = H(0.0);
  const double a = H0 / (2.0 * beta * beta);
  for (double r : log_grid(R * 1e-8, R, 257))
    if (!(H(r) > 0.0)) throw Error("shoot_liouville: H must be positive on [0, R]");
  if (!(H0 > 0.0)) throw Error("shoot_liouville: H must be positive on [0, R]");

  const double delta = std::exp(-u0 / beta);
  const double core = delta * std::pow(a, -1.0 / beta);  // where a e^{u0} r^β = 1
  const double r_match = std::min(1e-3 * core, 1e-3 * R);
  const double rho_match = r_match / delta;
  const double rho_max = R / delta;
  const double log_a = std::log(a);
  const double two_pi = 2.0 * std::numbers::pi;

  // Output and verification grids in log-radius.
  const double t_lo = std::log(r_match);
  const double t_hi = std::log(R);
  std::vector<double> out_nodes = log_grid(r_match, R, options.nodes);
  std::size_t n_verify = 0;
  std::vector<double> verify_ts = detail::uniform_with_nodes(t_lo, t_hi, 2e-3, &n_verify);

  // U(ρ) and ρ U'(ρ) for the H(0) bubble.
  auto bubble = [&](double log_rho) {
    const double L = log_a + beta * log_rho;
    return std::pair{-2.0 * detail::softplus(L), -2.0 * beta * detail::logistic(L)};
  };

  std::vector<double> u_vals(out_nodes.size()), u_ders(out_nodes.size());
  std::vector<double> d_vals(out_nodes.size()), d_ders(out_nodes.size());
  double mass = 0.0;
  double flux_mass = 0.0;
  std::pair<double, double> defect{0.0, r_match};

  if (options.form == ShootingForm::direct) {
    // y = (u, r u', mass) in t = log r.
    auto rhs = [&](const detail::State<3>& y, detail::State<3>& dy, double t) {
      const double r = std::exp(t);
      const double source = std::exp(beta * t + y[0]) * H(r);
      dy[0] = y[1];
      dy[1] = -source;
      dy[2] = two_pi * source;
    };
    const double lead = H0 * std::exp(u0 + beta * t_lo);
    const detail::State<3> y0{u0 - lead / (beta * beta), -lead / beta, two_pi * lead / beta};
    detail::StepLimits limits;
    limits.rel_tol = tol;
    limits.abs_tol = tol;

    std::vector<double> ts(out_nodes.size());
    for (std::size_t i = 0; i < ts.size(); ++i) ts[i] = std::log(out_nodes[i]);
    auto run = detail::integrate_dense<3>(rhs, y0, t_lo, ts, limits);
    for (std::size_t i = 0; i < out_nodes.size(); ++i) {
      const double r = out_nodes[i];
      u_vals[i] = run.states[i][0];
      u_ders[i] = run.states[i][1] / r;
      const auto [U, rhoU] = bubble(std::log(r / delta));
      d_vals[i] = u_vals[i] - u0 - U;
      d_ders[i] = (run.states[i][1] - rhoU) / (r / delta);
    }
    mass = run.states.back()[2];
    flux_mass = -two_pi * run.states.back()[1];
    if (options.check_residual) {
      auto verify = detail::integrate_dense<3>(rhs, y0, t_lo, verify_ts, limits);
      defect = detail::integral_defect<3>(rhs, verify);
    }
  } else {
    // y = (d, ρ d', mass) in τ = log ρ, where
    //   d_ττ = -ρ^β e^{U} (H0 (e^d - 1) + (H(δρ) - H0) e^d).
    auto weight = [&](double tau) {
      return std::exp(beta * tau - 2.0 * detail::softplus(log_a + beta * tau));
    };
    auto rhs = [&](const detail::State<3>& y, detail::State<3>& dy, double tau) {
      const double r = delta * std::exp(tau);
      const double P = weight(tau);
      const double e = std::exp(y[0]);
      dy[0] = y[1];
      dy[1] = -P * (H0 * std::expm1(y[0]) + H.minus_origin(r) * e);
      dy[2] = two_pi * P * H(r) * e;
    };
    const double tau_lo = std::log(rho_match);
    const double tau_hi = std::log(rho_max);
    detail::State<3> y0{0.0, 0.0, two_pi * H0 * std::exp(beta * tau_lo) / beta};
    RadialFn forcing = [&](double rho) { return -weight(std::log(rho)) * H.minus_origin(delta * rho); };
    if (const double F = forcing(rho_match); F != 0.0) {
      auto sigma = detail::local_power(forcing, rho_match, 0.5);
      if (!sigma || *sigma <= 0.0)
        throw Error("shoot_liouville: H - H(0) has no power-law onset at the origin");
      y0[0] = F / (*sigma * *sigma);
      y0[1] = *sigma * y0[0];
    }
    detail::StepLimits limits;
    limits.rel_tol = tol;
    limits.abs_tol = tol * 1e-14;

    std::vector<double> taus(out_nodes.size());
    for (std::size_t i = 0; i < taus.size(); ++i) taus[i] = std::log(out_nodes[i] / delta);
    taus.front() = tau_lo;
    auto run = detail::integrate_dense<3>(rhs, y0, tau_lo, taus, limits);
    for (std::size_t i = 0; i < out_nodes.size(); ++i) {
      const double r = out_nodes[i];
      const double rho = r / delta;
      const auto [U, rhoU] = bubble(std::log(rho));
      d_vals[i] = run.states[i][0];
      d_ders[i] = run.states[i][1] / rho;
      u_vals[i] = u0 + U + d_vals[i];
      u_ders[i] = (rhoU + run.states[i][1]) / r;
    }
    mass = run.states.back()[2];
    flux_mass = -two_pi * (bubble(tau_hi).second + run.states.back()[1]);
    if (options.check_residual) {
      std::vector<double> vt(verify_ts.size());
      for (std::size_t i = 0; i < vt.size(); ++i) vt[i] = verify_ts[i] - std::log(delta);
      vt.front() = tau_lo;
      auto verify = detail::integrate_dense<3>(rhs, y0, tau_lo, vt, limits);
      defect = detail::integral_defect<3>(rhs, verify);
      defect.second *= delta;
    }
  }

  if (options.check_residual && defect.first > 100.0 * tol)
    throw Error("shoot_liouville: residual " + std::to_string(defect.first) + " at r = " +
                std::to_string(defect.second) + " exceeds 100*tol");

  std::vector<double> rho_nodes(out_nodes.size());
  for (std::size_t i = 0; i < rho_nodes.size(); ++i) rho_nodes[i] = out_nodes[i] / delta;
  ProfileMeta u_meta{alpha.value(), r_match, R, "r"};
  ProfileMeta d_meta{alpha.value(), rho_match, rho_max, "rho"};
  return {RadialProfile(out_nodes, std::move(u_vals), std::move(u_ders), u_meta),
          RadialProfile(std::move(rho_nodes), std::move(d_vals), std::move(d_ders), d_meta),
          u0,
          delta,
          r_match,
          mass,
          flux_mass,
          defect.first,
          defect.second};
}

// ---------------------------------------------------------------------------
// Variation of parameters for
//     f'' + f'/s + (8/(1+s^2)^2 - d^2/s^2) f = l(s),   0 < s < ∞,
// with the explicit pair (f_11, f_12) of index d and Wronskian 2d(1-d^2)/s:
//     f(s) = A(s) f_11(s) + B(s) f_12(s),
//     A(s) = ∫_s^∞ f_12 l / W,   B(s) = ∫_0^s f_11 l / W.
// This is the unique solution regular at 0 and decaying at ∞.

struct VopOptions {
  std::vector<double> nodes;  // output abscissae in s; default 400 log-spaced on [1e-3, 1e3]
  double s_max = 1e4;
  double tail_tol = 1e-6;     // largest admissible analytic tail beyond s_max
  double quad_tol = 1e-13;
};

struct VopResult {
  RadialProfile profile;  // f and f' in s
  double tail_estimate;   // analytic tail of ∫_{s_max}^∞, already added to A
  double tail_bound;      // |tail_estimate|
};

namespace detail {

// Adaptive Gauss-Kronrod on [a, b]. The panel is mapped to [-1, 1] and the
// integrand divided by its midpoint magnitude, since the Boost error estimate
// behaves like an absolute one on short panels or for tiny integrands.
template <class F>
double gk_integrate(F&& f, double a, double b, double tol, double* error = nullptr) {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  double scale = std::abs(f(mid)) * half;
  if (!(scale > 0.0) || !std::isfinite(scale)) scale = half > 0.0 ? half : 1.0;
  auto g = [&](double x) { return f(mid + half * x) * (half / scale); };
  double err = 0.0;
  const double v =
      boost::math::quadrature::gauss_kronrod<double, 31>::integrate(g, -1.0, 1.0, 12, tol, &err);
  if (!std::isfinite(v)) throw Error("quadrature produced a non-finite value");
  if (error) *error = err * scale;
  return v * scale;
}

// Breakpoints refining [a, b] so that consecutive ratios stay below 2.
inline std::vector<double> geometric_breaks(double a, double b) {
  std::vector<double> out{a};
  const std::size_t n = std::max<std::size_t>(1, std::size_t(std::ceil(std::log2(b / a))));
  for (std::size_t i = 1; i < n; ++i) out.push_back(a * std::pow(b / a, double(i) / double(n)));
  out.push_back(b);
  return out;
}

}  // namespace detail

inline VopResult variation_of_parameters(double index, const RadialFn& l1,
                                         const VopOptions& options = {}) {
  check_mode_index(index);
  const std::vector<double> nodes =
      options.nodes.empty() ? log_grid(1e-3, 1e3, 400) : options.nodes;
  if (!std::is_sorted(nodes.begin(), nodes.end()) || !(nodes.front() > 0.0))
    throw Error("variation_of_parameters: nodes must be positive and sorted");
  if (!(options.s_max > nodes.back())) throw Error("variation_of_parameters: s_max must exceed the last node");

  const double w_coef = 2.0 * index * (1.0 - index * index);  // W(s) = w_coef / s
  auto integrand_a = [&](double s) {
    return eval_mode_fundamentals(index, s).f12 * l1(s) * s / w_coef;
  };
  auto integrand_b = [&](double s) {
    return eval_mode_fundamentals(index, s).f11 * l1(s) * s / w_coef;
  };
  auto panel = [&](auto& f, double lo, double hi) {
    double sum = 0.0;
    const auto breaks = detail::geometric_breaks(lo, hi);
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i)
      sum += detail::gk_integrate(f, breaks[i], breaks[i + 1], options.quad_tol);
    return sum;
  };

  // Tail of A beyond s_max from the local power-law decay of its integrand.
  const double smax = options.s_max;
  double tail = 0.0;
  if (const double at_max = integrand_a(smax); at_max != 0.0) {
    const double half = integrand_a(0.5 * smax);
    const double decay = (half != 0.0 && (half > 0) == (at_max > 0))
                             ? std::log(half / at_max) / std::log(2.0)
                             : 0.0;
    if (decay <= 1.05)
      throw Error("variation_of_parameters: forcing decays too slowly for the improper integral");
    tail = at_max * smax / (decay - 1.0);
    if (std::abs(tail) > options.tail_tol)
      throw Error("variation_of_parameters: tail beyond s_max is " + std::to_string(tail) +
                  ", above the requested tolerance");
  }

  const std::size_t n = nodes.size();
  std::vector<double> A(n), B(n);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double lo = i == 0 ? 0.0 : nodes[i - 1];
    acc += lo == 0.0 ? detail::gk_integrate(integrand_b, 0.0, nodes[0], options.quad_tol)
                     : panel(integrand_b, lo, nodes[i]);
    B[i] = acc;
  }
  acc = tail + panel(integrand_a, nodes[n - 1], smax);
  for (std::size_t i = n; i-- > 0;) {
    if (i + 1 < n) acc += panel(integrand_a, nodes[i], nodes[i + 1]);
    A[i] = acc;
  }

  std::vector<double> values(n), derivs(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto f = eval_mode_fundamentals(index, nodes[i]);
    values[i] = A[i] * f.f11 + B[i] * f.f12;
    derivs[i] = A[i] * f.df11 + B[i] * f.df12;
  }
  ProfileMeta meta{std::nullopt, nodes.front(), nodes.back(), "s"};
  return {RadialProfile(nodes, std::move(values), std::move(derivs), meta), tail, std::abs(tail)};
}

}  // namespace liouville
