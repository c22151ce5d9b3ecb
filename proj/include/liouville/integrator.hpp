#pragma once

// Adaptive Dormand-Prince 5(4) driver with dense output, used for every
// radial integration. Thin wrapper over Boost.Odeint that adds output at
// prescribed abscissae, step-size underflow detection and finiteness checks.

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "liouville/common.hpp"

namespace liouville::detail {

template <std::size_t N>
using State = std::array<double, N>;

template <std::size_t N>
struct DenseRun {
  std::vector<double> times;
  std::vector<State<N>> states;
  std::size_t steps = 0;
  double smallest_step = std::numeric_limits<double>::infinity();
};

struct StepLimits {
  double abs_tol = 1e-12;
  double rel_tol = 1e-10;
  std::size_t max_steps = 2'000'000;
};

// Integrates y' = rhs(y, t) from t0 (state y0) and reports the state at each
// abscissa of `outputs`, which must be ordered in the direction of travel
// and lie between t0 and the last requested time.
template <std::size_t N, class Rhs>
DenseRun<N> integrate_dense(Rhs&& rhs, const State<N>& y0, double t0,
                            const std::vector<double>& outputs, const StepLimits& limits) {
  namespace odeint = boost::numeric::odeint;
  DenseRun<N> run;
  if (outputs.empty()) return run;
  const double t_end = outputs.back();
  const double dir = t_end >= t0 ? 1.0 : -1.0;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    if (dir * (outputs[i] - t0) < -1e-14 * (1.0 + std::abs(t0)) ||
        (i > 0 && dir * (outputs[i] - outputs[i - 1]) < 0.0))
      throw Error("integrate_dense: output abscissae must be ordered along the integration");
  }
  run.times.reserve(outputs.size());
  run.states.reserve(outputs.size());

  auto system = [&rhs](const State<N>& y, State<N>& dydt, double t) { rhs(y, dydt, t); };
  auto stepper = odeint::make_dense_output(limits.abs_tol, limits.rel_tol,
                                           odeint::runge_kutta_dopri5<State<N>>());
  const double span = std::abs(t_end - t0);
  stepper.initialize(y0, t0, dir * std::max(span * 1e-4, 1e-8));

  std::size_t k = 0;
  while (k < outputs.size() && dir * (outputs[k] - t0) <= 0.0) {
    run.times.push_back(outputs[k]);
    run.states.push_back(y0);
    ++k;
  }
  State<N> y{};
  try {
    while (k < outputs.size()) {
      const auto [t_prev, t_cur] = stepper.do_step(system);
      ++run.steps;
      const double h = std::abs(t_cur - t_prev);
      run.smallest_step = std::min(run.smallest_step, h);
      if (h < 1e-13 * std::max(1.0, std::abs(t_cur)))
        throw Error("step size underflow near log-radius " + std::to_string(t_cur) +
                    " (r = " + std::to_string(std::exp(t_cur)) +
                    "); the coefficients are singular or the guard is violated");
      if (run.steps > limits.max_steps) throw Error("integrate_dense: step budget exhausted");
      for (double v : stepper.current_state())
        if (!std::isfinite(v))
          throw Error("non-finite state near log-radius " + std::to_string(t_cur));
      while (k < outputs.size() && dir * (outputs[k] - t_cur) <= 0.0) {
        stepper.calc_state(outputs[k], y);
        run.times.push_back(outputs[k]);
        run.states.push_back(y);
        ++k;
      }
    }
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(std::string("integrator failure: ") + e.what());
  }
  return run;
}

}  // namespace liouville::detail
