#pragma once

// Checks of the three-term expansion as an approximate solution of
//     Δu + |x|^{2α} V(x) e^u = 0   in B_1,
// with V the quadratic model of the local data: PDE residuals on a polar
// grid, the Dirichlet Green's function of a disk, the Green representation
// identity for radial solutions, and the displacement of the maximizer.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include <boost/math/tools/minima.hpp>

#include "liouville/closed_forms.hpp"
#include "liouville/common.hpp"
#include "liouville/ode_engine.hpp"
#include "liouville/profile.hpp"
#include "liouville/regression.hpp"

namespace liouville {

// Log-uniform radii (uniform in t = log r) times uniform angles on [0, 2π).
class PolarGrid {
 public:
  static constexpr std::size_t min_angles = 64;

  PolarGrid(double r_min, double r_max, std::size_t n_radial, std::size_t n_angular,
            double angle_offset = 0.0)
      : r_min_(r_min), r_max_(r_max), n_radial_(n_radial), n_angular_(n_angular),
        angle_offset_(angle_offset) {
    if (!(r_min >= 1e-6)) throw Error("PolarGrid: innermost radius must be at least 1e-6");
    if (!(r_max > r_min)) throw Error("PolarGrid: need r_min < r_max");
    if (n_radial < 8) throw Error("PolarGrid: need at least 8 radii");
    if (n_angular < min_angles) throw Error("PolarGrid: need at least 64 angles");
  }

  double r_min() const { return r_min_; }
  double r_max() const { return r_max_; }
  std::size_t n_radial() const { return n_radial_; }
  std::size_t n_angular() const { return n_angular_; }
  double angle_offset() const { return angle_offset_; }
  double log_step() const { return std::log(r_max_ / r_min_) / double(n_radial_ - 1); }
  double angle_step() const { return 2.0 * std::numbers::pi / double(n_angular_); }
  double radius(std::size_t i) const { return r_min_ * std::exp(log_step() * double(i)); }
  double angle(std::size_t j) const { return angle_offset_ + angle_step() * double(j); }

  // Same layout with both resolutions doubled.
  PolarGrid refined() const {
    return PolarGrid(r_min_, r_max_, 2 * n_radial_ - 1, 2 * n_angular_, angle_offset_);
  }
  PolarGrid rotated(double angle) const {
    return PolarGrid(r_min_, r_max_, n_radial_, n_angular_, angle_offset_ + angle);
  }

 private:
  double r_min_, r_max_;
  std::size_t n_radial_, n_angular_;
  double angle_offset_;
};

struct ResidualReport {
  double norm;  // sup |x|^2 |Δu + |x|^{2α} V e^u| / (bubble scale)
  double radius;
  double angle;
};

// Residual of the order-k expansion. The Laplacian is taken in (log r, θ):
//     |x|^2 Δu = ∂_t² u + ∂_θ² u,
// by centered differences of order `fd_order` (2 or 4), in extended
// precision. The weighted residual is normalized by the peak of the bubble's
// own term |x|^{2α+2} V0 e^U, which equals (2α+2)^2 / 2.
inline ResidualReport pde_residual(const Alpha& alpha, const LocalData& local, double u0,
                                   int order, const PolarGrid& grid, int fd_order = 4) {
  using T = long double;
  if (order < 0 || order > 2) throw Error("pde_residual: order must be 0, 1 or 2");
  if (fd_order != 2 && fd_order != 4) throw Error("pde_residual: fd_order must be 2 or 4");
  const ExpansionModel model(alpha, local, u0);
  const auto kernel = model.kernel<T>();
  const T beta = alpha.beta();
  const T normalization = beta * beta / T(2);

  const std::size_t nr = grid.n_radial();
  const std::size_t na = grid.n_angular();
  const std::size_t ghost = fd_order / 2;
  const T ht = std::log(T(grid.r_max()) / T(grid.r_min())) / T(nr - 1);
  const T ha = T(2) * std::numbers::pi_v<T> / T(na);
  const T t0 = std::log(T(grid.r_min()));

  // offset[i][j] = u - u0 at radius index i - ghost, angle j.
  const std::size_t rows = nr + 2 * ghost;
  std::vector<T> offset(rows * na);
  std::vector<T> cosines(na), sines(na);
  for (std::size_t j = 0; j < na; ++j) {
    const T th = T(grid.angle_offset()) + ha * T(j);
    cosines[j] = std::cos(th);
    sines[j] = std::sin(th);
  }
  for (std::size_t i = 0; i < rows; ++i) {
    const T t = t0 + ht * (T(i) - T(ghost));
    const T r = std::exp(t);
    for (std::size_t j = 0; j < na; ++j)
      offset[i * na + j] = kernel.eval_offset(r * cosines[j], r * sines[j], r, order);
  }
  auto at = [&](std::size_t i, std::ptrdiff_t j) -> T {
    const std::ptrdiff_t m = (j % std::ptrdiff_t(na) + std::ptrdiff_t(na)) % std::ptrdiff_t(na);
    return offset[i * na + std::size_t(m)];
  };
  auto second = [fd_order](T fm2, T fm1, T f0, T fp1, T fp2, T h) {
    if (fd_order == 2) return (fm1 - T(2) * f0 + fp1) / (h * h);
    return (-fm2 + T(16) * fm1 - T(30) * f0 + T(16) * fp1 - fp2) / (T(12) * h * h);
  };

  ResidualReport report{0.0, grid.r_min(), grid.angle(0)};
  for (std::size_t i = 0; i < nr; ++i) {
    const std::size_t row = i + ghost;
    const T t = t0 + ht * T(i);
    const T r = std::exp(t);
    for (std::size_t j = 0; j < na; ++j) {
      const std::ptrdiff_t jj = std::ptrdiff_t(j);
      const T f0 = at(row, jj);
      const T utt = fd_order == 2
                        ? second(0, at(row - 1, jj), f0, at(row + 1, jj), 0, ht)
                        : second(at(row - 2, jj), at(row - 1, jj), f0, at(row + 1, jj), at(row + 2, jj), ht);
      const T uaa = second(at(row, jj - 2), at(row, jj - 1), f0, at(row, jj + 1), at(row, jj + 2), ha);
      const Vec2 x{double(r * cosines[j]), double(r * sines[j])};
      const T V = T(local.v0) + T(local.grad.x) * (r * cosines[j]) + T(local.grad.y) * (r * sines[j]) +
                  T(0.5) * (T(local.hess.xx) * r * r * cosines[j] * cosines[j] +
                            T(2) * T(local.hess.xy) * r * r * cosines[j] * sines[j] +
                            T(local.hess.yy) * r * r * sines[j] * sines[j]);
      const T source = std::exp(beta * t + T(u0) + f0) * V;
      const T weighted = std::abs(utt + uaa + source) / normalization;
      if (!std::isfinite(double(weighted)))
        throw Error("pde_residual: non-finite residual at r = " + std::to_string(double(r)) +
                    ", theta = " + std::to_string(grid.angle(j)) + " (x = " +
                    std::to_string(x.x) + ", " + std::to_string(x.y) + ")");
      if (double(weighted) > report.norm) report = {double(weighted), double(r), grid.angle(j)};
    }
  }
  return report;
}

// Dirichlet Green's function of the disk of radius R:
//   G(y, η) = -(1/2π) log|y - η| + (1/2π) log((|y|/R) |R^2 y/|y|^2 - η|),
// using |(|y|/R)(R^2 y/|y|^2 - η)|^2 = R^2 - 2 y·η + |y|^2 |η|^2 / R^2,
// which is regular at y = 0.
inline double green_disk(double R, Vec2 y, Vec2 eta) {
  if (!(R > 0.0)) throw Error("green_disk: R must be positive");
  if (norm(y) >= R || norm(eta) > R * (1.0 + 1e-12)) throw Error("green_disk: points must lie in the disk");
  const double d = norm(y - eta);
  if (d == 0.0) throw Error("green_disk: coincident points");
  const double image2 = R * R - 2.0 * dot(y, eta) + dot(y, y) * dot(eta, eta) / (R * R);
  const double inv2pi = 1.0 / (2.0 * std::numbers::pi);
  return -inv2pi * std::log(d) + 0.5 * inv2pi * std::log(image2);
}

struct GreenIdentity {
  double lhs;  // u(0)
  double rhs;  // ∫ G(0,η) |η|^{2α} H e^u dη + boundary mean of u
  double discrepancy;
  double quadrature_error;
};

// Green representation at the origin for a radial solution on B_R:
//   u(0) = ∫_0^R log(R/r) r^{2α+1} H(r) e^{u(r)} dr + u(R).
// `u_center` is u(0); the profile covers [r_first, R]. Below r_first the
// integrand is closed-form with u frozen at its first sample.
inline GreenIdentity green_identity_check(const RadialProfile& profile, const Alpha& alpha,
                                          const RadialFunction& H, double u_center) {
  const auto& nodes = profile.nodes();
  const double R = nodes.back();
  const double beta = alpha.beta();
  auto integrand_t = [&](double t) {
    const double r = std::exp(t);
    const double u = profile.value_at(std::clamp(r, nodes.front(), R));
    const double h = H(r);
    if (h == 0.0) return 0.0;
    return std::log(R / r) * std::exp(beta * t + u) * h;
  };
  const double r0 = nodes.front();
  const double h0 = H(0.0);
  double total = h0 == 0.0 ? 0.0
                           : h0 * std::exp(profile.values().front() + beta * std::log(r0)) *
                                 (std::log(R / r0) / beta + 1.0 / (beta * beta));
  double err_total = 0.0;
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
    double err = 0.0;
    total += detail::gk_integrate(integrand_t, std::log(nodes[i]), std::log(nodes[i + 1]), 1e-13, &err);
    err_total += err;
  }
  if (!std::isfinite(total)) throw Error("green_identity_check: quadrature failed");
  if (err_total > 1e-6 * std::max(1.0, std::abs(total)))
    throw Error("green_identity_check: quadrature did not converge (error estimate " +
                std::to_string(err_total) + ")");
  const double rhs = total + profile.values().back();
  return {u_center, rhs, std::abs(u_center - rhs), err_total};
}

struct DisplacementFit {
  std::vector<double> deltas;
  std::vector<double> radii;
  double exponent;
  double stderr;
};

// Radius of the maximizer of (U + φ)(t e_1) over t in R for a bubble of
// scale δ, found by bracketed Brent searches in log-radius on each half-axis.
inline double argmax_radius(const Alpha& alpha, const LocalData& local, double delta) {
  const BubbleParams p = BubbleParams::with_scale(alpha, local.v0, delta);
  if (local.grad.x == 0.0) return 0.0;
  auto profile = [&](double t) {
    const double r = std::abs(t);
    return eval_bubble(p, r).value + eval_phi(local, p, {t, 0.0});
  };
  const double origin = profile(0.0);
  double best_r = 0.0;
  double best_v = origin;
  double upper = std::log(10.0 / std::pow(p.a, 1.0 / alpha.beta()));
  const double lower = std::log(1e-14);
  for (int attempt = 0; attempt < 2; ++attempt) {
    bool at_edge = false;
    for (double side : {-1.0, 1.0}) {
      auto neg = [&](double lr) { return -profile(side * std::exp(lr)); };
      const auto [lr, v] = boost::math::tools::brent_find_minima(neg, lower, upper, 52);
      if (-v > best_v) {
        best_v = -v;
        best_r = std::exp(lr);
        at_edge = upper - lr < 1e-6;
      }
    }
    if (!at_edge) return best_r;
    upper += std::log(10.0);
  }
  throw Error("argmax_radius: maximizer stays at the bracket endpoint after widening");
}

inline DisplacementFit argmax_displacement(const Alpha& alpha, const LocalData& local,
                                           const std::vector<double>& deltas) {
  if (local.grad.x == 0.0) throw Error("argmax_displacement: gradient component c must be nonzero");
  if (deltas.size() < 4) throw Error("argmax_displacement: need at least 4 scales");
  const auto [lo, hi] = std::minmax_element(deltas.begin(), deltas.end());
  if (std::log10(*hi / *lo) < 2.0 - 1e-9)
    throw Error("argmax_displacement: scales must span at least two decades");
  DisplacementFit out;
  std::vector<std::pair<double, double>> pairs;
  for (double d : deltas) {
    const double r = argmax_radius(alpha, local, d);
    if (!(r > 0.0)) throw Error("argmax_displacement: maximizer collapsed to the origin");
    out.deltas.push_back(d);
    out.radii.push_back(r);
    pairs.emplace_back(d, r);
  }
  const auto f = fit_scaling_exponent(pairs);
  out.exponent = f.slope;
  out.stderr = f.stderr;
  return out;
}

}  // namespace liouville
