#pragma once

#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "liouville/common.hpp"

namespace liouville {

struct LineFit {
  double slope;
  double intercept;
  double stderr_slope;
};

// Ordinary least squares y = intercept + slope x.
inline LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n != y.size() || n < 2) throw Error("fit_line: need at least two paired samples");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= double(n);
  my /= double(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw Error("fit_line: abscissae are all equal");
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = y[i] - intercept - slope * x[i];
    sse += e * e;
  }
  const double se = n > 2 ? std::sqrt(sse / double(n - 2) / sxx) : 0.0;
  return {slope, intercept, se};
}

struct ScalingFit {
  double slope;
  double stderr;
};

// Log-log regression of magnitude against scale.
inline ScalingFit fit_scaling_exponent(std::span<const std::pair<double, double>> pairs) {
  if (pairs.size() < 4) throw Error("fit_scaling_exponent: need at least 4 pairs");
  std::vector<double> lx, ly;
  lx.reserve(pairs.size());
  ly.reserve(pairs.size());
  for (const auto& [scale, magnitude] : pairs) {
    if (!(scale > 0.0) || !(magnitude > 0.0))
      throw Error("fit_scaling_exponent: scales and magnitudes must be positive");
    lx.push_back(std::log(scale));
    ly.push_back(std::log(magnitude));
  }
  const auto f = fit_line(lx, ly);
  return {f.slope, f.stderr_slope};
}

}  // namespace liouville
