#pragma once

#include <cmath>
#include <concepts>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>

namespace liouville {

// Every recoverable failure in the library is reported through this type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend Vec2 operator-(Vec2 a) { return {-a.x, -a.y}; }
  friend bool operator==(Vec2, Vec2) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }

inline Vec2 rotate(Vec2 v, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

// Symmetric 2x2 matrix stored by its three independent entries.
struct Sym2 {
  double xx = 0.0;
  double xy = 0.0;
  double yy = 0.0;

  double trace() const { return xx + yy; }
  double quadratic_form(Vec2 v) const {
    return xx * v.x * v.x + 2.0 * xy * v.x * v.y + yy * v.y * v.y;
  }
  friend bool operator==(const Sym2&, const Sym2&) = default;
};

// R^T S R for the rotation R by `angle`; expresses S in a frame rotated by `angle`.
inline Sym2 rotate_into_frame(const Sym2& s, double angle) {
  const double c = std::cos(angle);
  const double n = std::sin(angle);
  return {c * c * s.xx + 2.0 * c * n * s.xy + n * n * s.yy,
          (c * c - n * n) * s.xy + c * n * (s.yy - s.xx),
          n * n * s.xx - 2.0 * c * n * s.xy + c * c * s.yy};
}

using RadialFn = std::function<double(double)>;

// A radial coefficient r -> H(r) with two derivatives. `increment` returns
// H(r) - H(0) without cancellation when supplied.
struct RadialFunction {
  RadialFn value;
  RadialFn d1;
  RadialFn d2;
  RadialFn increment;

  double operator()(double r) const { return value(r); }
  double minus_origin(double r) const {
    return increment ? increment(r) : value(r) - value(0.0);
  }

  static RadialFunction constant(double c) {
    return {[c](double) { return c; }, [](double) { return 0.0; },
            [](double) { return 0.0; }, [](double) { return 0.0; }};
  }

  // c0 + c2 r^2, i.e. a radial quadratic with Laplacian 4 c2 at the origin.
  static RadialFunction quadratic(double c0, double c2) {
    return {[c0, c2](double r) { return c0 + c2 * r * r; },
            [c2](double r) { return 2.0 * c2 * r; },
            [c2](double) { return 2.0 * c2; },
            [c2](double r) { return c2 * r * r; }};
  }
};

namespace detail {

// log(1 + e^x) without overflow.
template <std::floating_point T>
T softplus(T x) {
  if (x > T(0)) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

// 1 / (1 + e^{-x}).
template <std::floating_point T>
T logistic(T x) {
  if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}

inline double log_or_lowest(double r) {
  return r > 0.0 ? std::log(r) : -std::numeric_limits<double>::infinity();
}

}  // namespace detail
}  // namespace liouville
