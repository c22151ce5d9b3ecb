#pragma once

// The operator Δ + |y|^{2α} V0 e^U linearized at the bubble, split into
// angular modes: growth exponents of the regular mode solutions, forced
// radial problems, and the second-order correction c assembled from the
// quadratic part of V and the square of the first-order correction.

#include <algorithm>
#include <array>
#include <cmath>
#include <future>
#include <optional>
#include <string>
#include <vector>

#include "liouville/closed_forms.hpp"
#include "liouville/common.hpp"
#include "liouville/ode_engine.hpp"
#include "liouville/profile.hpp"
#include "liouville/regression.hpp"

namespace liouville {

// ---------------------------------------------------------------------------
// Kernel triviality.

struct ModeGrowth {
  int k;
  double exponent_at_zero;
  double exponent_at_infinity;
  double stderr_at_infinity;
  bool window_ok;  // |u| positive and monotone on both fit windows
  bool certified;
};

struct TrivialityReport {
  std::vector<ModeGrowth> modes;
  bool certified;
};

struct TrivialityOptions {
  double r_min = 1e-4;
  double r_max = 1e4;
  double zero_window_hi = 1e-3;   // fit window at 0 is [r_min, zero_window_hi]
  double infinity_window_lo = 1e2;  // fit window at ∞ is [infinity_window_lo, r_max]
  double tolerance = 0.05;
  bool with_bubble = true;  // false drops r^{2α} v0 e^U, leaving the Euler equation
  double tol = 1e-10;
};

namespace detail {

struct WindowFit {
  double slope;
  double stderr;
  bool ok;
};

inline WindowFit fit_window(const RadialProfile& p, double lo, double hi) {
  std::vector<std::pair<double, double>> pairs;
  bool ok = true;
  double previous = -1.0;
  int trend = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double r = p.nodes()[i];
    if (r < lo * (1 - 1e-12) || r > hi * (1 + 1e-12)) continue;
    const double v = std::abs(p.values()[i]);
    if (!(v > 0.0)) {
      ok = false;
      continue;
    }
    if (previous > 0.0) {
      const int step = v > previous ? 1 : (v < previous ? -1 : 0);
      if (trend == 0) trend = step;
      else if (step != 0 && step != trend) ok = false;
    }
    previous = v;
    pairs.emplace_back(r, v);
  }
  if (pairs.size() < 4) return {std::nan(""), std::nan(""), false};
  const auto f = fit_scaling_exponent(pairs);
  return {f.slope, f.stderr, ok};
}

}  // namespace detail

// Growth exponents at 0 and ∞ of the solution regular at 0 for every mode
// k = 1..k_max. A mode is certified when its ∞-exponent is at least
// k (1 - tolerance): the regular solution then grows, so the mode carries no
// bounded solution vanishing at the origin.
inline TrivialityReport kernel_triviality_report(const Alpha& alpha, double v0, int k_max,
                                                 const TrivialityOptions& options = {}) {
  if (k_max < 1 || k_max > 10) throw Error("kernel_triviality_report: k_max must lie in [1, 10]");
  if (!(v0 > 0.0)) throw Error("kernel_triviality_report: v0 must be positive");
  const std::size_t per_decade = 100;
  const std::size_t n =
      std::size_t(std::ceil(std::log10(options.r_max / options.r_min) * per_decade)) + 1;
  TrivialityReport report{{}, true};
  for (int k = 1; k <= k_max; ++k) {
    auto problem = ModeProblem::liouville_mode(alpha, v0, k, options.r_min, options.r_max,
                                               options.with_bubble);
    SingularOptions so;
    so.nodes = log_grid(options.r_min, options.r_max, n);
    const auto profile = integrate_singular(problem, Direction::outward, Seed::regular, options.tol, so);
    const auto at0 = detail::fit_window(profile, options.r_min, options.zero_window_hi);
    const auto atinf = detail::fit_window(profile, options.infinity_window_lo, options.r_max);
    const bool ok = at0.ok && atinf.ok;
    const bool certified = ok && atinf.slope >= k * (1.0 - options.tolerance) && atinf.slope > 0.0;
    report.modes.push_back({k, at0.slope, atinf.slope, atinf.stderr, ok, certified});
    report.certified = report.certified && certified;
  }
  return report;
}

// ---------------------------------------------------------------------------
// Forced radial problems decaying at both ends.

// Solution of problem.forcing that is regular at r_min and decaying at r_max:
// particular + A (regular) on [r_min, r_mid], particular + B (decaying) on
// [r_mid, r_max], with A and B fixed by C^1 matching at r_mid.
inline RadialProfile solve_forced_mode(const ModeProblem& problem, double r_mid,
                                       const std::vector<double>& nodes, double tol = 1e-11) {
  if (!(r_mid > problem.r_min && r_mid < problem.r_max))
    throw Error("solve_forced_mode: matching radius must lie inside the interval");
  std::vector<double> inner, outer;
  for (double r : nodes) (r <= r_mid ? inner : outer).push_back(r);
  if (inner.empty() || inner.back() != r_mid) inner.push_back(r_mid);
  if (outer.empty() || outer.front() != r_mid) outer.insert(outer.begin(), r_mid);

  ModeProblem left = problem;
  left.r_max = r_mid;
  ModeProblem right = problem;
  right.r_min = r_mid;
  ModeProblem left_h = left;
  left_h.forcing = {};
  ModeProblem right_h = right;
  right_h.forcing = {};

  SingularOptions particular{inner, 0.0};
  SingularOptions homogeneous{inner, 1.0};
  const auto p_out = integrate_singular(left, Direction::outward, Seed::regular, tol, particular);
  const auto h_reg = integrate_singular(left_h, Direction::outward, Seed::regular, tol, homogeneous);
  particular.nodes = outer;
  homogeneous.nodes = outer;
  const auto p_in = integrate_singular(right, Direction::inward, Seed::decaying, tol, particular);
  const auto h_dec = integrate_singular(right_h, Direction::inward, Seed::decaying, tol, homogeneous);

  const double a11 = h_reg.values().back(), a12 = -h_dec.values().front();
  const double a21 = h_reg.derivs().back(), a22 = -h_dec.derivs().front();
  const double b1 = p_in.values().front() - p_out.values().back();
  const double b2 = p_in.derivs().front() - p_out.derivs().back();
  const double det = a11 * a22 - a12 * a21;
  if (std::abs(det) <= 1e-10 * (std::abs(a11 * a22) + std::abs(a12 * a21)))
    throw Error("solve_forced_mode: regular and decaying solutions are dependent (resonance)");
  const double A = (b1 * a22 - a12 * b2) / det;
  const double B = (a11 * b2 - a21 * b1) / det;

  std::vector<double> r, v, dv;
  for (std::size_t i = 0; i < inner.size(); ++i) {
    r.push_back(inner[i]);
    v.push_back(p_out.values()[i] + A * h_reg.values()[i]);
    dv.push_back(p_out.derivs()[i] + A * h_reg.derivs()[i]);
  }
  for (std::size_t i = 1; i < outer.size(); ++i) {
    r.push_back(outer[i]);
    v.push_back(p_in.values()[i] + B * h_dec.values()[i]);
    dv.push_back(p_in.derivs()[i] + B * h_dec.derivs()[i]);
  }
  return RadialProfile(std::move(r), std::move(v), std::move(dv),
                       {std::nullopt, problem.r_min, problem.r_max, "r"});
}

// Radial factor of the first-order correction computed from its ODE
//     g'' + g'/r + (r^{2α} v0 e^U - 1/r^2) g = -r^{2α+1} e^U
// with decay at both ends.
inline RadialProfile solve_g_numeric(const Alpha& alpha, double v0, double R,
                                     std::size_t nodes_per_decade = 100, bool with_forcing = true) {
  if (!(R >= 1e3)) throw Error("solve_g_numeric: R must be at least 1e3");
  const double r_min = 1e-4;
  auto problem = ModeProblem::liouville_mode(alpha, v0, 1, r_min, R);
  if (with_forcing) {
    const double beta = alpha.beta();
    const double log_a = std::log(bubble_coefficient(alpha, v0));
    problem.forcing = [=](double r) {
      const double lr = std::log(r);
      return -std::exp((beta - 1.0) * lr - 2.0 * detail::softplus(log_a + beta * lr));
    };
  }
  const std::size_t n = std::size_t(std::ceil(std::log10(R / r_min) * double(nodes_per_decade))) + 1;
  auto profile = solve_forced_mode(problem, 1.0, log_grid(r_min, R, n));
  ProfileMeta meta = profile.meta();
  meta.alpha = alpha.value();
  return RadialProfile(profile.nodes(), profile.values(), profile.derivs(), meta);
}

// ---------------------------------------------------------------------------
// Second-order forcing.

enum class Harmonic { cos2_minus_half, sin2_minus_half, cos_sin };

// θ1^2 - 1/2, θ2^2 - 1/2 or θ1 θ2 for the unit vector at `angle`.
inline double eval_harmonic(Harmonic h, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  switch (h) {
    case Harmonic::cos2_minus_half: return c * c - 0.5;
    case Harmonic::sin2_minus_half: return s * s - 0.5;
    case Harmonic::cos_sin: return c * s;
  }
  return 0.0;
}

inline const char* harmonic_name(Harmonic h) {
  switch (h) {
    case Harmonic::cos2_minus_half: return "theta1^2-1/2";
    case Harmonic::sin2_minus_half: return "theta2^2-1/2";
    case Harmonic::cos_sin: return "theta1*theta2";
  }
  return "?";
}

// r^{2+2α} e^U, the radial factor of the Hessian pieces.
inline double hessian_radial_factor(const Alpha& alpha, double v0, double r) {
  if (r <= 0.0) return 0.0;
  const double beta = alpha.beta();
  const double lr = std::log(r);
  return std::exp(beta * lr - 2.0 * detail::softplus(std::log(bubble_coefficient(alpha, v0)) + beta * lr));
}

// r^{2α} e^U ((v0/2) g^2 + g r), the radial factor of the gradient pieces.
inline double gradient_radial_factor(const Alpha& alpha, double v0, double r) {
  if (r <= 0.0) return 0.0;
  const double g = eval_g(alpha, v0, r).value;
  return hessian_radial_factor(alpha, v0, r) / (r * r) * (0.5 * v0 * g * g + g * r);
}

// Splitting of the quadratic part of V and of the products of the first
// order correction into angular pieces, in blown-up variables y = x/δ.
// The frame is rotated so that ∇V(0) = |∇V(0)| e_1.
struct ForcingDecomposition {
  Alpha alpha;
  double v0;
  double delta;
  double frame_angle;    // angle of ∇V(0); 0 when the gradient vanishes
  Sym2 hess_aligned;     // Hessian in the aligned frame
  double laplacian;
  double grad_norm2;
  Vec2 grad;

  static ForcingDecomposition make(const Alpha& alpha, const LocalData& local, double delta) {
    const double angle = norm(local.grad) > 0.0 ? std::atan2(local.grad.y, local.grad.x) : 0.0;
    return {alpha, local.v0, delta, angle, rotate_into_frame(local.hess, angle),
            local.laplacian, dot(local.grad, local.grad), local.grad};
  }

  // F11 coefficients for (θ1^2-1/2, θ2^2-1/2, θ1θ2) in the aligned frame.
  std::array<double, 3> f11_coefficients() const {
    return {0.5 * hess_aligned.xx, 0.5 * hess_aligned.yy, hess_aligned.xy};
  }
  // Radial coefficient of F12 = (1/4) δ^2 r^2 ΔV(0).
  double f12_coefficient() const { return 0.25 * delta * delta * laplacian; }

  double aligned_angle(Vec2 y) const { return std::atan2(y.y, y.x) - frame_angle; }

  // δ^2 (1/2) y·Hy, the quadratic part of V(δy).
  double F1(Vec2 y) const {
    const Sym2 h = rotate_into_frame(hess_aligned, -frame_angle);
    return delta * delta * 0.5 * h.quadratic_form(y);
  }
  double F11(Vec2 y) const {
    const double r = norm(y);
    if (r == 0.0) return 0.0;
    const double th = aligned_angle(y);
    const auto c = f11_coefficients();
    return delta * delta * r * r *
           (c[0] * eval_harmonic(Harmonic::cos2_minus_half, th) +
            c[1] * eval_harmonic(Harmonic::sin2_minus_half, th) +
            c[2] * eval_harmonic(Harmonic::cos_sin, th));
  }
  double F12(Vec2 y) const { return f12_coefficient() * dot(y, y); }

  double C11(Vec2 y) const {
    const double r = norm(y);
    if (r == 0.0) return 0.0;
    return delta * delta * grad_norm2 * eval_harmonic(Harmonic::cos2_minus_half, aligned_angle(y)) *
           gradient_radial_factor(alpha, v0, r);
  }
  double C12(Vec2 y) const {
    return 0.5 * delta * delta * grad_norm2 * gradient_radial_factor(alpha, v0, norm(y));
  }

  // (v0/2) r^{2α} e^U φ^2 + δ r^{2α} ∇V(0)·y e^U φ, computed directly.
  double gradient_products(Vec2 y) const {
    const double r = norm(y);
    if (r == 0.0) return 0.0;
    const BubbleParams p = BubbleParams::with_scale(alpha, v0, delta);
    const double phi = eval_phi(LocalData::make(v0, grad), p, y);
    const double weight = hessian_radial_factor(alpha, v0, r) / (r * r);
    return weight * (0.5 * v0 * phi * phi + delta * dot(grad, y) * phi);
  }
};

// E(r) = (1/4) r^{2+2α} ΔV(0) δ^2 e^U + (1/2) δ^2 r^{2α} e^U |∇V(0)|^2 ((v0/2) g^2 + g r),
// the radial forcing left after the correction c is removed.
struct SecondOrderForcing {
  Alpha alpha;
  double v0;
  double delta;
  double laplacian;
  double grad_norm2;

  static SecondOrderForcing make(const Alpha& alpha, const LocalData& local, double delta) {
    return {alpha, local.v0, delta, local.laplacian, dot(local.grad, local.grad)};
  }
  double operator()(double r) const {
    const double d2 = delta * delta;
    return 0.25 * d2 * laplacian * hessian_radial_factor(alpha, v0, r) +
           0.5 * d2 * grad_norm2 * gradient_radial_factor(alpha, v0, r);
  }
};

// ---------------------------------------------------------------------------
// Correction c.

struct EnvelopeFit {
  double constant;     // sup |Q| (1 + a r^{2+2α})^2 / r^{2+2α}
  double inner_slope;  // log-log slope of that ratio over the first decade
  double outer_slope;  // and over the last decade
  bool ok;
};

// Checks |Q(r)| <= C r^{2+2α} / (1 + a r^{2+2α})^2 on [r_lo, r_hi]: the ratio
// must be finite and must not grow toward either end.
inline EnvelopeFit check_forcing_envelope(const Alpha& alpha, double v0, const RadialFn& Q,
                                          double r_lo, double r_hi) {
  const double a = bubble_coefficient(alpha, v0);
  const double beta = alpha.beta();
  const auto rs = log_grid(r_lo, r_hi, std::size_t(std::ceil(std::log10(r_hi / r_lo) * 40)) + 1);
  std::vector<double> ratio(rs.size());
  double sup = 0.0;
  for (std::size_t i = 0; i < rs.size(); ++i) {
    const double rb = std::pow(rs[i], beta);
    ratio[i] = std::abs(Q(rs[i])) * (1.0 + a * rb) * (1.0 + a * rb) / rb;
    if (!std::isfinite(ratio[i])) return {INFINITY, NAN, NAN, false};
    sup = std::max(sup, ratio[i]);
  }
  if (sup == 0.0) return {0.0, 0.0, 0.0, true};
  auto slope = [&](std::size_t i0, std::size_t i1) {
    const double lo = std::max(ratio[i0], 1e-300 * sup);
    const double hi = std::max(ratio[i1], 1e-300 * sup);
    return std::log(hi / lo) / std::log(rs[i1] / rs[i0]);
  };
  const std::size_t decade = 40;
  const double inner = slope(0, std::min(decade, rs.size() - 1));
  const double outer = slope(rs.size() - 1 - std::min(decade, rs.size() - 1), rs.size() - 1);
  return {sup, inner, outer, inner > -0.05 && outer < 0.05};
}

struct HarmonicPiece {
  Harmonic harmonic;
  std::string source;  // "hessian" or "gradient"
  RadialFn Q;          // radial forcing, coefficient included
  RadialProfile h;     // solution in r; c receives δ^2 f(θ) h(r)
  EnvelopeFit forcing_envelope;
  double envelope_constant;  // sup |h| (1+r)^3 / r^2
  double residual;           // sup |h'' + h'/r + (r^{2α} v0 e^U - 4/r^2) h + Q| on the check window
};

struct CorrectionOptions {
  double r_lo = 1e-4;
  double log_step = 4e-3;
  double check_lo = 0.1;
  double check_hi = 10.0;
  bool parallel = true;
};

// c(y) = δ^2 Σ f_j(θ) h_j(r) in blown-up variables on 0 < r <= R.
class CorrectionField {
 public:
  CorrectionField(ForcingDecomposition forcing, double R, std::vector<HarmonicPiece> pieces)
      : forcing_(std::move(forcing)), R_(R), pieces_(std::move(pieces)) {}

  const std::vector<HarmonicPiece>& pieces() const { return pieces_; }
  const ForcingDecomposition& forcing() const { return forcing_; }
  double R() const { return R_; }
  double delta() const { return forcing_.delta; }

  double envelope_constant() const {
    double c = 0.0;
    for (const auto& p : pieces_) c = std::max(c, p.envelope_constant);
    return c;
  }
  // δ^2 times the largest piece residual.
  double mode_residual() const {
    double c = 0.0;
    for (const auto& p : pieces_) c = std::max(c, p.residual);
    return forcing_.delta * forcing_.delta * c;
  }

  double operator()(Vec2 y) const {
    const double r = norm(y);
    if (r == 0.0 || pieces_.empty()) return 0.0;
    if (r > R_ * (1 + 1e-12)) throw Error("correction evaluated outside its domain");
    const double th = forcing_.aligned_angle(y);
    double sum = 0.0;
    for (const auto& p : pieces_) {
      const double lo = p.h.nodes().front();
      const double h = r >= lo ? p.h.value_at(std::min(r, p.h.nodes().back()))
                               : p.h.values().front() * (r / lo) * (r / lo);
      sum += eval_harmonic(p.harmonic, th) * h;
    }
    return forcing_.delta * forcing_.delta * sum;
  }

 private:
  ForcingDecomposition forcing_;
  double R_;
  std::vector<HarmonicPiece> pieces_;
};

namespace detail {

// Residual of the mode-2 equation on the nodes of a log-uniform profile; h''
// comes from a 4th-order centered difference of the exact h' in log r.
inline double residual_mode2(const Alpha& alpha, double v0, const RadialFn& Q,
                             const RadialProfile& h, double lo, double hi) {
  const auto& r = h.nodes();
  const auto& dh = h.derivs();
  const auto& v = h.values();
  double worst = 0.0;
  for (std::size_t i = 2; i + 2 < r.size(); ++i) {
    if (r[i] < lo || r[i] > hi) continue;
    const double ht = std::log(r[i + 1] / r[i]);
    const double ddt = (dh[i - 2] - 8.0 * dh[i - 1] + 8.0 * dh[i + 1] - dh[i + 2]) / (12.0 * ht);
    const double h2 = ddt / r[i];
    const double pot = hessian_radial_factor(alpha, v0, r[i]) * v0 / (r[i] * r[i]) - 4.0 / (r[i] * r[i]);
    worst = std::max(worst, std::abs(h2 + dh[i] / r[i] + pot * v[i] + Q(r[i])));
  }
  return worst;
}

}  // namespace detail

// Solves h'' + h'/r + (r^{2α} v0 e^U - 4/r^2) h = -Q on (0, ∞) through the
// mode variable s = sqrt(a) r^{1+α}, where the equation becomes the index
// 2/(1+α) fundamental-pair problem with l(s) = -Q(r(s)) / (m^2 a r^{2α}).
inline RadialProfile solve_mode2(const Alpha& alpha, double v0, const RadialFn& Q,
                                 const std::vector<double>& r_nodes) {
  const ModeVariable mv = ModeVariable::make(alpha, v0);
  RadialFn l = [&](double s) {
    const double r = mv.r_of_s(s);
    return -Q(r) / mv.operator_factor(r);
  };
  VopOptions vo;
  vo.nodes.reserve(r_nodes.size());
  for (double r : r_nodes) vo.nodes.push_back(mv.s_of_r(r));
  vo.s_max = std::max(1e4, 10.0 * vo.nodes.back());
  const auto res = variation_of_parameters(alpha.mode_index(2), l, vo);
  std::vector<double> values(r_nodes.size()), derivs(r_nodes.size());
  for (std::size_t i = 0; i < r_nodes.size(); ++i) {
    values[i] = res.profile.values()[i];
    derivs[i] = res.profile.derivs()[i] * mv.ds_dr(r_nodes[i]);
  }
  return RadialProfile(r_nodes, std::move(values), std::move(derivs),
                       {alpha.value(), r_nodes.front(), r_nodes.back(), "r"});
}

// Assembles the correction c solving
//     Δc + |y|^{2α} V0 e^U c + C11 + |y|^{2α} F11 e^U = 0,   0 < |y| < R,
// as the sum of four angular pieces δ^2 f(θ) h(r).
inline CorrectionField build_correction_c(const Alpha& alpha, const LocalData& local,
                                          const BubbleParams& p, double R,
                                          const CorrectionOptions& options = {}) {
  if (std::abs(p.v0 - local.v0) > 1e-12 * local.v0)
    throw Error("build_correction_c: bubble and local data disagree on V(0)");
  if (!(R > options.r_lo * 10)) throw Error("build_correction_c: R is too small");
  const auto fd = ForcingDecomposition::make(alpha, local, p.scale);
  const double v0 = local.v0;
  const auto coef = fd.f11_coefficients();

  struct Spec {
    Harmonic harmonic;
    const char* source;
    double coefficient;
    bool gradient;
  };
  const std::array<Spec, 4> specs{{{Harmonic::cos2_minus_half, "hessian", coef[0], false},
                                   {Harmonic::sin2_minus_half, "hessian", coef[1], false},
                                   {Harmonic::cos_sin, "hessian", coef[2], false},
                                   {Harmonic::cos2_minus_half, "gradient", fd.grad_norm2, true}}};

  const std::size_t n = std::size_t(std::ceil(std::log(R / options.r_lo) / options.log_step)) + 1;
  const auto nodes = log_grid(options.r_lo, R, n);

  auto solve = [&](const Spec& s) -> std::optional<HarmonicPiece> {
    if (s.coefficient == 0.0) return std::nullopt;
    const double c = s.coefficient;
    RadialFn Q = s.gradient ? RadialFn([=](double r) { return c * gradient_radial_factor(alpha, v0, r); })
                            : RadialFn([=](double r) { return c * hessian_radial_factor(alpha, v0, r); });
    const auto env = check_forcing_envelope(alpha, v0, Q, options.r_lo, R);
    if (!env.ok)
      throw Error(std::string("build_correction_c: ") + s.source + " forcing for " +
                  harmonic_name(s.harmonic) + " violates the decay envelope");
    auto h = solve_mode2(alpha, v0, Q, nodes);
    double envelope = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) {
      const double r = h.nodes()[i];
      envelope = std::max(envelope, std::abs(h.values()[i]) * std::pow(1.0 + r, 3) / (r * r));
    }
    const double residual = detail::residual_mode2(alpha, v0, Q, h, options.check_lo,
                                                   std::min(options.check_hi, R));
    return HarmonicPiece{s.harmonic, s.source, Q, std::move(h), env, envelope, residual};
  };

  std::vector<HarmonicPiece> pieces;
  if (options.parallel) {
    std::vector<std::future<std::optional<HarmonicPiece>>> jobs;
    for (const auto& s : specs) jobs.push_back(std::async(std::launch::async, solve, s));
    for (auto& j : jobs)
      if (auto piece = j.get()) pieces.push_back(std::move(*piece));
  } else {
    for (const auto& s : specs)
      if (auto piece = solve(s)) pieces.push_back(std::move(*piece));
  }
  return CorrectionField(fd, R, std::move(pieces));
}

}  // namespace liouville
