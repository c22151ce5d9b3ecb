#pragma once

// Closed-form objects attached to the singular Liouville equation
//
//     Δu + |x|^{2α} V(x) e^u = 0,      α > 0, α not an integer,
//
// near a blowup point at the origin: the standard bubble, the first-order
// correction g, the radial kernel element, the explicit fundamental pairs of
// the angular mode equations, the two second-order constants and the full
// three-term expansion. All evaluators are pure.

#include <cmath>
#include <concepts>
#include <functional>
#include <numbers>
#include <string>

#include "liouville/common.hpp"

namespace liouville {

// Singularity order α. Rejects values within `guard` of a positive integer,
// where the mode fundamentals and the expansion degenerate.
class Alpha {
 public:
  static constexpr double default_guard = 0.05;

  explicit Alpha(double value, double guard = default_guard) : value_(value) {
    if (!(value > 0.0) || !std::isfinite(value))
      throw Error("alpha must be positive, got " + std::to_string(value));
    const double nearest = std::round(value);
    if (nearest >= 1.0 && std::abs(value - nearest) < guard)
      throw Error("alpha must be non-integer (alpha not in N), got " + std::to_string(value) +
                  " within " + std::to_string(guard) + " of " + std::to_string(nearest));
  }

  double value() const { return value_; }
  // Power of the bubble tail: 2α + 2.
  double beta() const { return 2.0 * value_ + 2.0; }
  // Index of mode k after the substitution s ~ r^{1+α}: k / (1+α).
  double mode_index(int k) const { return k / (1.0 + value_); }

 private:
  double value_;
};

// a = v0 / (8 (1+α)^2), the bubble coefficient.
inline double bubble_coefficient(const Alpha& alpha, double v0) {
  const double m = 1.0 + alpha.value();
  return v0 / (8.0 * m * m);
}

struct BubbleParams {
  Alpha alpha;
  double v0;
  double a;
  double u0;
  double scale;  // δ = exp(-u0 / (2 + 2α))

  static BubbleParams make(const Alpha& alpha, double v0, double u0 = 0.0) {
    if (!(v0 > 0.0)) throw Error("v0 must be positive");
    return {alpha, v0, bubble_coefficient(alpha, v0), u0, std::exp(-u0 / alpha.beta())};
  }

  // Same bubble with the scale prescribed directly (u0 = -β log δ).
  static BubbleParams with_scale(const Alpha& alpha, double v0, double delta) {
    if (!(delta > 0.0)) throw Error("scale must be positive");
    BubbleParams p = make(alpha, v0, -alpha.beta() * std::log(delta));
    p.scale = delta;
    return p;
  }
};

// V(0), ∇V(0) and the Hessian of V at the origin.
struct LocalData {
  double v0;
  Vec2 grad;
  Sym2 hess;
  double laplacian;

  static LocalData make(double v0, Vec2 grad = {}, Sym2 hess = {}) {
    if (!(v0 > 0.0)) throw Error("V(0) must be positive");
    return {v0, grad, hess, hess.xx + hess.yy};
  }

  // V0 + ∇V·x + ½ x·Hx.
  double quadratic_model(Vec2 x) const {
    return v0 + dot(grad, x) + 0.5 * hess.quadratic_form(x);
  }
};

struct ExpansionCoefficients {
  double lambda1;
  double lambda2;
};

// Value and radial derivative of a radial function.
struct RadialValue {
  double value;
  double deriv;
};

enum class Normalization { unit_center, height_u0 };

namespace detail {

// U(r) = -2 log(1 + e^{L}) with L = log(a r^β) (+ u0 for the height form).
template <std::floating_point T>
T bubble_from_log(T L) {
  return std::isinf(L) && L < T(0) ? T(0) : T(-2) * softplus(L);
}

}  // namespace detail

// Standard bubble. unit-center: U(r) = -2 log(1 + a r^{2α+2}); height-u0:
// log(e^{u0} / (1 + a e^{u0} r^{2α+2})^2). Evaluated in log space.
inline RadialValue eval_bubble(const BubbleParams& p, double r,
                               Normalization normalization = Normalization::unit_center) {
  if (!(r >= 0.0)) throw Error("eval_bubble: r must be nonnegative");
  const double beta = p.alpha.beta();
  const double height = normalization == Normalization::height_u0 ? p.u0 : 0.0;
  if (r == 0.0) return {height, 0.0};
  const double L = std::log(p.a) + height + beta * std::log(r);
  return {height - 2.0 * detail::softplus(L), -2.0 * beta / r * detail::logistic(L)};
}

inline ExpansionCoefficients expansion_coefficients(const Alpha& alpha, double v0) {
  if (!(v0 > 0.0)) throw Error("v0 must be positive");
  const double m = 1.0 + alpha.value();
  const double lambda1 = -std::numbers::pi / (v0 * std::sin(std::numbers::pi / m) * m) *
                         std::pow(8.0 * m * m / v0, 1.0 / m);
  return {lambda1, -lambda1 / v0};
}

// 2(1+α) / (α v0), the magnitude of the slope of g at the origin.
inline double g_slope(const Alpha& alpha, double v0) {
  return 2.0 * (1.0 + alpha.value()) / (alpha.value() * v0);
}

// g(r) = -(2(1+α)/(α v0)) r / (1 + a r^{2α+2}), the radial factor of the
// first-order correction.
inline RadialValue eval_g(const Alpha& alpha, double v0, double r) {
  if (!(r >= 0.0)) throw Error("eval_g: r must be nonnegative");
  const double k0 = g_slope(alpha, v0);
  if (r == 0.0) return {0.0, -k0};
  const double L = std::log(bubble_coefficient(alpha, v0)) + alpha.beta() * std::log(r);
  const double inner = detail::logistic(-L);  // 1 / (1 + a r^β)
  const double outer = detail::logistic(L);   // a r^β / (1 + a r^β)
  return {-k0 * r * inner, -k0 * inner * (inner + (1.0 - alpha.beta()) * outer)};
}

// φ(y) = g(r) δ ∇V(0)·θ; continuous through y = 0.
inline double eval_phi(const LocalData& local, const BubbleParams& p, Vec2 y) {
  const double r = norm(y);
  const double L = r > 0.0 ? std::log(p.a) + p.alpha.beta() * std::log(r)
                           : -std::numeric_limits<double>::infinity();
  const double g_over_r = -g_slope(p.alpha, p.v0) * detail::logistic(-L);
  return g_over_r * p.scale * dot(local.grad, y);
}

// f(r) = (1 - a r^{2α+2}) / (1 + a r^{2α+2}), the radial kernel element of
// the linearized operator.
inline RadialValue eval_radial_kernel(const Alpha& alpha, double v0, double r) {
  if (!(r >= 0.0)) throw Error("eval_radial_kernel: r must be nonnegative");
  if (r == 0.0) return {1.0, 0.0};
  const double L = std::log(bubble_coefficient(alpha, v0)) + alpha.beta() * std::log(r);
  const double lo = detail::logistic(-L);
  const double hi = detail::logistic(L);
  return {lo - hi, -2.0 * alpha.beta() / r * lo * hi};
}

// Explicit fundamental pair of
//     f'' + f'/s + (8/(1+s^2)^2 - d^2/s^2) f = 0
// with index d != 1:
//     f_11 = ((d+1)s^d + (d-1)s^{d+2}) / (1+s^2)       regular at 0
//     f_12 = ((d+1)s^{2-d} + (d-1)s^{-d}) / (1+s^2)    decaying at ∞
struct ModeFundamentals {
  double f11;
  double df11;
  double f12;
  double df12;
};

inline void check_mode_index(double d, double guard = Alpha::default_guard) {
  if (!(d > 0.0)) throw Error("mode index must be positive");
  if (std::abs(d - 1.0) < guard)
    throw Error("mode index " + std::to_string(d) + " is within " + std::to_string(guard) +
                " of 1; fundamental pair degenerates");
}

inline ModeFundamentals eval_mode_fundamentals(double d, double s) {
  check_mode_index(d);
  if (!(s > 0.0)) throw Error("eval_mode_fundamentals: s must be positive");
  const double s2 = s * s;
  const double den = 1.0 + s2;

  const double n1 = (d + 1.0) * std::pow(s, d) + (d - 1.0) * std::pow(s, d + 2.0);
  const double dn1 =
      d * (d + 1.0) * std::pow(s, d - 1.0) + (d - 1.0) * (d + 2.0) * std::pow(s, d + 1.0);
  const double n2 = (d + 1.0) * std::pow(s, 2.0 - d) + (d - 1.0) * std::pow(s, -d);
  const double dn2 =
      (d + 1.0) * (2.0 - d) * std::pow(s, 1.0 - d) - d * (d - 1.0) * std::pow(s, -d - 1.0);

  return {n1 / den, (dn1 * den - 2.0 * s * n1) / (den * den), n2 / den,
          (dn2 * den - 2.0 * s * n2) / (den * den)};
}

// f_11 f_12' - f_11' f_12 = 2d(1 - d^2) / s.
inline double fundamental_wronskian(double d, double s) { return 2.0 * d * (1.0 - d * d) / s; }

// Leading power-law coefficients: f_11 ~ c s^d and f_12 ~ c s^{-d}.
struct FundamentalAsymptotics {
  double f11_at_zero;
  double f11_at_infinity;
  double f12_at_zero;
  double f12_at_infinity;
};

inline FundamentalAsymptotics mode_fundamental_asymptotics(double d) {
  check_mode_index(d);
  return {d + 1.0, d - 1.0, d - 1.0, d + 1.0};
}

// s = sqrt(a) r^{1+α}: the substitution that turns the mode equations into
// the form solved by the explicit fundamental pairs.
struct ModeVariable {
  double sqrt_a;
  double m;  // 1 + α

  static ModeVariable make(const Alpha& alpha, double v0) {
    return {std::sqrt(bubble_coefficient(alpha, v0)), 1.0 + alpha.value()};
  }
  double s_of_r(double r) const { return sqrt_a * std::pow(r, m); }
  double r_of_s(double s) const { return std::pow(s / sqrt_a, 1.0 / m); }
  // ds/dr at r.
  double ds_dr(double r) const { return m * sqrt_a * std::pow(r, m - 1.0); }
  // Factor J(r) = m^2 a r^{2α} relating the two operators:
  // (d²/dr² + (1/r) d/dr) = J(r) (d²/ds² + (1/s) d/ds).
  double operator_factor(double r) const { return m * m * sqrt_a * sqrt_a * std::pow(r, 2.0 * (m - 1.0)); }
};

using HarmonicFn = std::function<double(Vec2)>;

namespace detail {

// Core of the three-term expansion, templated so that residual checks can
// evaluate it in extended precision. Returns u(x) - u0.
template <std::floating_point T>
struct ExpansionKernel {
  T beta;
  T log_a;
  T u0;
  T gradient_factor;  // -(2(1+α)/(α v0))
  T grad_x;
  T grad_y;
  T log_coefficient;  // Λ1 ΔV + Λ2 |∇V|^2

  T eval_offset(T x, T y, T r, int order) const {
    // a e^{u0} r^β in log form.
    const T L = r > T(0) ? log_a + u0 + beta * std::log(r) : -std::numeric_limits<T>::infinity();
    T out = bubble_from_log(L);
    if (order >= 1) out += gradient_factor * (grad_x * x + grad_y * y) * logistic(-L);
    if (order >= 2)
      out += log_coefficient * std::log(T(2) + std::exp(u0 / beta) * r) *
             std::exp(-u0 * T(2) / beta);
    return out;
  }
};

}  // namespace detail

// Three-term expansion of a blowup solution around the origin:
//   order 0: bubble of height u0 plus the harmonic part ψ
//   order 1: + -(2(1+α)/(α V0)) ∇V(0)·x / (1 + a e^{u0} |x|^{2α+2})
//   order 2: + (Λ1 ΔV(0) + Λ2 |∇V(0)|^2) log(2 + e^{u0/(2(1+α))}|x|) e^{-u0/(1+α)}
class ExpansionModel {
 public:
  ExpansionModel(const Alpha& alpha, const LocalData& local, double u0, HarmonicFn psi = {})
      : alpha_(alpha), local_(local), u0_(u0), psi_(std::move(psi)) {
    if (psi_ && std::abs(psi_({0.0, 0.0})) > 1e-12)
      throw Error("harmonic part must vanish at the origin, got psi(0) = " +
                  std::to_string(psi_({0.0, 0.0})));
  }

  const Alpha& alpha() const { return alpha_; }
  const LocalData& local() const { return local_; }
  double u0() const { return u0_; }
  double scale() const { return std::exp(-u0_ / alpha_.beta()); }

  template <std::floating_point T = double>
  detail::ExpansionKernel<T> kernel() const {
    const auto c = expansion_coefficients(alpha_, local_.v0);
    return {T(alpha_.beta()),
            T(std::log(bubble_coefficient(alpha_, local_.v0))),
            T(u0_),
            T(-g_slope(alpha_, local_.v0)),
            T(local_.grad.x),
            T(local_.grad.y),
            T(c.lambda1 * local_.laplacian + c.lambda2 * dot(local_.grad, local_.grad))};
  }

  double psi(Vec2 x) const { return psi_ ? psi_(x) : 0.0; }
  bool has_psi() const { return static_cast<bool>(psi_); }

  // u(x) for |x| <= 1.
  double operator()(Vec2 x, int order) const {
    if (order < 0 || order > 2) throw Error("expansion order must be 0, 1 or 2");
    if (norm(x) > 1.0 + 1e-12) throw Error("expansion is defined on the unit disk");
    return u0_ + kernel<double>().eval_offset(x.x, x.y, norm(x), order) + psi(x);
  }

 private:
  Alpha alpha_;
  LocalData local_;
  double u0_;
  HarmonicFn psi_;
};

inline double eval_expansion(const Alpha& alpha, const LocalData& local, const HarmonicFn& psi,
                             double u0, Vec2 x, int order) {
  return ExpansionModel(alpha, local, u0, psi)(x, order);
}

}  // namespace liouville
