#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "liouville/common.hpp"

namespace liouville {

struct ProfileMeta {
  std::optional<double> alpha;
  double lo = 0.0;
  double hi = 0.0;
  std::string variable = "r";  // "r", "s" (mode variable) or "rho" (blown-up radius)
};

// A radial function sampled on a strictly increasing positive grid, with its
// derivative with respect to the sampling variable. Immutable once built.
class RadialProfile {
 public:
  RadialProfile(std::vector<double> nodes, std::vector<double> values,
                std::vector<double> derivs, ProfileMeta meta = {})
      : nodes_(std::move(nodes)),
        values_(std::move(values)),
        derivs_(std::move(derivs)),
        meta_(std::move(meta)) {
    if (nodes_.empty()) throw Error("profile needs at least one node");
    if (values_.size() != nodes_.size() || derivs_.size() != nodes_.size())
      throw Error("profile arrays must have equal length");
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      if (!(nodes_[i] > 0.0)) throw Error("profile nodes must be positive");
      if (i > 0 && !(nodes_[i] > nodes_[i - 1]))
        throw Error("profile nodes must be strictly increasing");
      if (!std::isfinite(values_[i]) || !std::isfinite(derivs_[i]))
        throw Error("non-finite profile sample at node " + std::to_string(nodes_[i]));
    }
    if (meta_.lo == 0.0 && meta_.hi == 0.0) {
      meta_.lo = nodes_.front();
      meta_.hi = nodes_.back();
    }
  }

  const std::vector<double>& nodes() const { return nodes_; }
  const std::vector<double>& values() const { return values_; }
  const std::vector<double>& derivs() const { return derivs_; }
  const ProfileMeta& meta() const { return meta_; }
  std::size_t size() const { return nodes_.size(); }

  // Cubic Hermite interpolation in log-radius; exact at the nodes.
  double value_at(double r) const { return hermite(r).first; }
  double deriv_at(double r) const { return hermite(r).second; }

 private:
  std::pair<double, double> hermite(double r) const {
    if (r < nodes_.front() * (1 - 1e-12) || r > nodes_.back() * (1 + 1e-12))
      throw Error("profile evaluated outside [" + std::to_string(nodes_.front()) + ", " +
                  std::to_string(nodes_.back()) + "] at " + std::to_string(r));
    if (nodes_.size() == 1) return {values_[0], derivs_[0]};
    auto it = std::upper_bound(nodes_.begin(), nodes_.end(), r);
    std::size_t j = std::clamp<std::size_t>(it - nodes_.begin(), 1, nodes_.size() - 1);
    const double t0 = std::log(nodes_[j - 1]);
    const double t1 = std::log(nodes_[j]);
    const double h = t1 - t0;
    const double x = (std::log(r) - t0) / h;
    // Derivatives with respect to log r.
    const double m0 = derivs_[j - 1] * nodes_[j - 1] * h;
    const double m1 = derivs_[j] * nodes_[j] * h;
    const double y0 = values_[j - 1];
    const double y1 = values_[j];
    const double x2 = x * x;
    const double x3 = x2 * x;
    const double value = (2 * x3 - 3 * x2 + 1) * y0 + (x3 - 2 * x2 + x) * m0 +
                         (-2 * x3 + 3 * x2) * y1 + (x3 - x2) * m1;
    const double dvalue_dx = (6 * x2 - 6 * x) * y0 + (3 * x2 - 4 * x + 1) * m0 +
                             (-6 * x2 + 6 * x) * y1 + (3 * x2 - 2 * x) * m1;
    return {value, dvalue_dx / (h * r)};
  }

  std::vector<double> nodes_;
  std::vector<double> values_;
  std::vector<double> derivs_;
  ProfileMeta meta_;
};

// n points log-uniform on [lo, hi].
inline std::vector<double> log_grid(double lo, double hi, std::size_t n) {
  if (!(lo > 0.0) || !(hi > lo) || n < 2) throw Error("log_grid: need 0 < lo < hi and n >= 2");
  std::vector<double> out(n);
  const double a = std::log(lo);
  const double b = std::log(hi);
  for (std::size_t i = 0; i < n; ++i) out[i] = std::exp(a + (b - a) * double(i) / double(n - 1));
  out.front() = lo;
  out.back() = hi;
  return out;
}

}  // namespace liouville
