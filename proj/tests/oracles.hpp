#pragma once

// Reference values computed independently of the library: 50-digit
// arithmetic for constants, forward-mode autodiff for derivatives of the
// closed forms.

#include <cmath>
#include <numbers>

#include <boost/math/constants/constants.hpp>
#include <boost/math/differentiation/autodiff.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

namespace oracle {

using Big = boost::multiprecision::cpp_bin_float_50;
namespace ad = boost::math::differentiation;

inline Big lambda1(const Big& alpha, const Big& v0) {
  const Big m = 1 + alpha;
  const Big pi = boost::math::constants::pi<Big>();
  return -pi / (v0 * sin(pi / m) * m) * pow(8 * m * m / v0, 1 / m);
}

inline Big lambda2(const Big& alpha, const Big& v0) {
  const Big m = 1 + alpha;
  const Big pi = boost::math::constants::pi<Big>();
  return pi / (v0 * v0 * sin(pi / m) * m) * pow(8 * m * m / v0, 1 / m);
}

// ∫_{R^2} |y|^{2α} v0 e^{U} dy: with t = a r^{2α+2} the radial integral is
// 2π v0 / (a (2α+2)) ∫_0^∞ dt / (1+t)^2 = 8π(1+α).
inline double bubble_mass(double alpha) { return 8.0 * std::numbers::pi * (1.0 + alpha); }

// Value and first two derivatives of a scalar function of r.
struct Jet {
  double v, d1, d2;
};

template <class F>
Jet jet(F&& f, double r) {
  const auto x = ad::make_fvar<double, 2>(r);
  const auto y = f(x);
  return {y.derivative(0), y.derivative(1), y.derivative(2)};
}

inline double coefficient_a(double alpha, double v0) { return v0 / (8.0 * (1.0 + alpha) * (1.0 + alpha)); }

inline Jet bubble(double alpha, double v0, double r) {
  const double a = coefficient_a(alpha, v0), b = 2.0 * alpha + 2.0;
  return jet([&](auto x) { return -2.0 * log(1.0 + a * pow(x, b)); }, r);
}

inline Jet g(double alpha, double v0, double r) {
  const double a = coefficient_a(alpha, v0), b = 2.0 * alpha + 2.0;
  const double k = 2.0 * (1.0 + alpha) / (alpha * v0);
  return jet([&](auto x) { return -k * x / (1.0 + a * pow(x, b)); }, r);
}

inline Jet kernel(double alpha, double v0, double r) {
  const double a = coefficient_a(alpha, v0), b = 2.0 * alpha + 2.0;
  return jet([&](auto x) { return (1.0 - a * pow(x, b)) / (1.0 + a * pow(x, b)); }, r);
}

// r^{2α} v0 e^{U(r)} = v0 r^{2α} / (1 + a r^{2α+2})^2.
inline double bubble_weight(double alpha, double v0, double r) {
  const double a = coefficient_a(alpha, v0);
  const double q = 1.0 + a * std::pow(r, 2.0 * alpha + 2.0);
  return v0 * std::pow(r, 2.0 * alpha) / (q * q);
}

// |Σ terms| / max(1, Σ |terms|).
template <class... T>
double scaled_sum(T... terms) {
  const double sum = (terms + ...);
  const double mag = (std::abs(terms) + ...);
  return std::abs(sum) / std::max(1.0, mag);
}

}  // namespace oracle
