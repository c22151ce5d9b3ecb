#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "liouville/closed_forms.hpp"
#include "liouville/ode_engine.hpp"
#include "liouville/regression.hpp"
#include "oracles.hpp"

using namespace liouville;

namespace {

double loglog_slope(const RadialProfile& p, double lo, double hi) {
  std::vector<double> x, y;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double r = p.nodes()[i];
    if (r < lo || r > hi) continue;
    x.push_back(std::log(r));
    y.push_back(std::log(std::abs(p.values()[i])));
  }
  return fit_line(x, y).slope;
}

ModeProblem euler(int k, double r_min, double r_max) {
  ModeProblem p;
  p.k = k;
  p.nu = k;
  p.potential = [k](double r) { return -double(k * k) / (r * r); };
  p.r_min = r_min;
  p.r_max = r_max;
  return p;
}

}  // namespace

TEST(IntegrateSingular, EulerEquationIsExact) {
  const auto p = euler(2, 1e-3, 1.0);
  const auto prof = integrate_singular(p, Direction::outward, Seed::regular, 1e-12);
  const double c0 = prof.values().front() / (1e-6);
  for (std::size_t i = 0; i < prof.size(); ++i) {
    const double r = prof.nodes()[i];
    EXPECT_NEAR(prof.values()[i] / (r * r), c0, 1e-9 * std::abs(c0));
  }
}

TEST(IntegrateSingular, RegularModeGrowsLikeRk) {
  const Alpha alpha(0.5);
  const auto p = ModeProblem::liouville_mode(alpha, 18.0, 1, 1e-4, 1e4);
  const auto prof = integrate_singular(p, Direction::outward, Seed::regular, 1e-10,
                                       {log_grid(1e-4, 1e4, 801), 1.0});
  EXPECT_NEAR(loglog_slope(prof, 1e2, 1e4), 1.0, 0.05);
  EXPECT_NEAR(loglog_slope(prof, 1e-4, 1e-3), 1.0, 0.05);
}

TEST(IntegrateSingular, DecayingModeMatchesClosedPair) {
  const Alpha alpha(0.5);
  const double v0 = 18.0;
  const auto p = ModeProblem::liouville_mode(alpha, v0, 1, 1e-4, 1e4);
  const auto prof = integrate_singular(p, Direction::inward, Seed::decaying, 1e-11,
                                       {log_grid(1e-4, 1e4, 801), 1.0});
  EXPECT_NEAR(loglog_slope(prof, 1e2, 1e4), -1.0, 0.05);
  EXPECT_NEAR(loglog_slope(prof, 1e-4, 1e-3), -1.0, 0.05);

  // Same solution as f_12(s(r)) up to normalization.
  const auto mv = ModeVariable::make(alpha, v0);
  const double d = alpha.mode_index(1);
  const double r1 = mv.r_of_s(1.0);
  const double scale = prof.value_at(r1) / eval_mode_fundamentals(d, 1.0).f12;
  double worst = 0.0;
  for (std::size_t i = 0; i < prof.size(); ++i) {
    const double r = prof.nodes()[i];
    const double ref = scale * eval_mode_fundamentals(d, mv.s_of_r(r)).f12;
    worst = std::max(worst, std::abs(prof.values()[i] - ref) / std::abs(ref));
  }
  EXPECT_LT(worst, 1e-6);
}

TEST(IntegrateSingular, AbelWronskianIsConstant) {
  // For u'' + u'/r + q u = 0 the Wronskian times r is constant.
  for (double av : {0.5, 1.5}) {
    const Alpha alpha(av);
    const auto mv = ModeVariable::make(alpha, 18.0);
    const double lo = mv.r_of_s(0.1), hi = mv.r_of_s(100.0);
    for (int k : {1, 2}) {
      const auto p = ModeProblem::liouville_mode(alpha, 18.0, k, 1e-4, 1e4);
      const auto nodes = log_grid(lo, hi, 200);
      const auto reg = integrate_singular(p, Direction::outward, Seed::regular, 1e-11, {nodes, 1.0});
      const auto dec = integrate_singular(p, Direction::inward, Seed::decaying, 1e-11, {nodes, 1.0});
      const double w0 = nodes.front() * (reg.values().front() * dec.derivs().front() -
                                         reg.derivs().front() * dec.values().front());
      for (std::size_t i = 0; i < nodes.size(); ++i) {
        const double w = nodes[i] * (reg.values()[i] * dec.derivs()[i] - reg.derivs()[i] * dec.values()[i]);
        EXPECT_NEAR(w, w0, 1e-6 * std::abs(w0)) << av << " " << k << " " << nodes[i];
      }
    }
  }
}

TEST(IntegrateSingular, TighterToleranceReducesError) {
  const Alpha alpha(0.5);
  const auto mv = ModeVariable::make(alpha, 18.0);
  const double d = alpha.mode_index(2);
  const auto p = ModeProblem::liouville_mode(alpha, 18.0, 2, 1e-4, 1e3);
  const auto nodes = log_grid(1e-4, 1e3, 300);
  auto error_at = [&](double tol) {
    const auto prof = integrate_singular(p, Direction::outward, Seed::regular, tol, {nodes, 1.0});
    const double scale = prof.values().front() / eval_mode_fundamentals(d, mv.s_of_r(1e-4)).f11;
    double worst = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const double ref = scale * eval_mode_fundamentals(d, mv.s_of_r(nodes[i])).f11;
      worst = std::max(worst, std::abs(prof.values()[i] - ref) / std::abs(ref));
    }
    return worst;
  };
  const double coarse = error_at(1e-6), fine = error_at(5e-7);
  EXPECT_LT(fine, coarse / 2.0) << coarse << " " << fine;
  EXPECT_LT(error_at(1e-10), 1e-8);
}

TEST(IntegrateSingular, RejectsBadTolerance) {
  const auto p = euler(1, 1e-3, 1.0);
  EXPECT_THROW(integrate_singular(p, Direction::outward, Seed::regular, 1e-14), Error);
  EXPECT_THROW(integrate_singular(p, Direction::outward, Seed::regular, 1e-5), Error);
}

TEST(ShootLiouville, StartupSeriesCoefficient) {
  const Alpha alpha(0.5);
  const auto sol = shoot_liouville(alpha, RadialFunction::constant(18.0), 0.0, 1.0);
  const double r = sol.u.nodes()[5];
  EXPECT_NEAR((sol.u.values()[5] - 0.0) / (r * r * r), -2.0, 0.02);
}

TEST(ShootLiouville, FrozenCoefficientReproducesBubble) {
  const Alpha alpha(0.5);
  for (auto form : {ShootingForm::direct, ShootingForm::deviation}) {
    ShootOptions o;
    o.form = form;
    const auto sol = shoot_liouville(alpha, RadialFunction::constant(18.0), 0.0, 10.0, o);
    const auto p = BubbleParams::make(alpha, 18.0, 0.0);
    double worst = 0.0;
    for (std::size_t i = 0; i < sol.u.size(); ++i)
      worst = std::max(worst, std::abs(sol.u.values()[i] - eval_bubble(p, sol.u.nodes()[i]).value));
    EXPECT_LE(worst, 1e-7);
    EXPECT_LE(sol.max_residual, 100.0 * o.tol);
  }
}

TEST(ShootLiouville, DeviationTracksBubbleUniformly) {
  const Alpha alpha(0.5);
  for (double u0 : {10.0, 20.0, 30.0}) {
    const auto sol = shoot_liouville(alpha, RadialFunction::constant(18.0), u0, 1.0);
    const auto p = BubbleParams::make(alpha, 18.0, u0);
    double worst = 0.0;
    for (std::size_t i = 0; i < sol.u.size(); ++i) {
      const double r = sol.u.nodes()[i];
      worst = std::max(worst, std::abs(sol.u.values()[i] - (u0 + eval_bubble(p, r / p.scale).value)));
    }
    EXPECT_LT(worst, 1e-6) << u0;
    EXPECT_NEAR(sol.delta, p.scale, 1e-15 * p.scale);
  }
}

TEST(ShootLiouville, MassApproachesQuantizedValue) {
  const Alpha alpha(0.5);
  double prev = 0.0;
  for (double u0 : {5.0, 15.0, 30.0}) {
    const auto sol = shoot_liouville(alpha, RadialFunction::constant(18.0), u0, 1.0);
    EXPECT_GE(sol.mass, prev);
    prev = sol.mass;
    EXPECT_NEAR(sol.flux_mass, sol.mass, 1e-7 * sol.mass);
  }
  EXPECT_NEAR(prev, oracle::bubble_mass(0.5), 1e-2 * oracle::bubble_mass(0.5));
}

TEST(ShootLiouville, RejectsInvalidInput) {
  const Alpha alpha(0.5);
  EXPECT_THROW(shoot_liouville(alpha, RadialFunction::constant(-1.0), 1.0, 1.0), Error);
  EXPECT_THROW(shoot_liouville(alpha, RadialFunction::quadratic(1.0, -4.0), 1.0, 1.0), Error);
  EXPECT_THROW(shoot_liouville(alpha, RadialFunction::constant(18.0), 46.0, 1.0), Error);
  EXPECT_THROW(shoot_liouville(alpha, RadialFunction::constant(18.0), 1.0, 0.0), Error);
}

TEST(VariationOfParameters, ZeroForcing) {
  const auto res = variation_of_parameters(2.0 / 3.0, [](double) { return 0.0; });
  for (double v : res.profile.values()) EXPECT_EQ(v, 0.0);
}

TEST(VariationOfParameters, ModelForcingSolvesEquationWithEnvelope) {
  const double d = 4.0 / 3.0;  // 2δ with δ = 2/3
  RadialFn l = [](double s) { return std::pow(s, 4.0 / 3.0) / std::pow(1 + s * s, 2); };
  VopOptions o;
  o.nodes = log_grid(1e-3, 1e3, 1201);
  const auto res = variation_of_parameters(d, l, o);
  const auto& s = res.profile.nodes();
  const auto& f = res.profile.values();
  const auto& df = res.profile.derivs();
  double envelope = 0.0, worst = 0.0;
  for (std::size_t i = 2; i + 2 < s.size(); ++i) {
    envelope = std::max(envelope, std::abs(f[i]) * std::pow(1 + s[i], 2) / std::pow(s[i], d));
    const double h = std::log(s[i + 1] / s[i]);
    const double f2 = (df[i - 2] - 8 * df[i - 1] + 8 * df[i + 1] - df[i + 2]) / (12 * h) / s[i];
    const double q = 8.0 / std::pow(1 + s[i] * s[i], 2) - d * d / (s[i] * s[i]);
    worst = std::max(worst, oracle::scaled_sum(f2, df[i] / s[i], q * f[i], -l(s[i])));
  }
  EXPECT_LT(worst, 1e-6);
  // s^{2δ} at 0; at ∞ the forcing ~ s^{2δ-4} leaves a particular part ~ s^{2δ-2}.
  EXPECT_LT(envelope, 10.0);
  EXPECT_NEAR(loglog_slope(res.profile, 1e-3, 1e-2), d, 0.02);
  EXPECT_NEAR(loglog_slope(res.profile, 1e2, 1e3), d - 2.0, 0.05);
}

TEST(VariationOfParameters, ReproducesFirstOrderFactor) {
  // g'' + g'/r + (r^{2α} v0 e^U - 1/r^2) g = -r^{2α+1} e^U in the variable s.
  for (double av : {0.5, 1.5}) {
    const Alpha alpha(av);
    const double v0 = 18.0;
    const auto mv = ModeVariable::make(alpha, v0);
    RadialFn l = [&](double s) {
      const double r = mv.r_of_s(s);
      const double w = oracle::bubble_weight(av, v0, r);
      return -(w * r / v0) / mv.operator_factor(r);
    };
    VopOptions o;
    o.nodes = log_grid(0.1, 10.0, 41);
    const auto res = variation_of_parameters(alpha.mode_index(1), l, o);
    for (std::size_t i = 0; i < o.nodes.size(); ++i) {
      const double ref = eval_g(alpha, v0, mv.r_of_s(o.nodes[i])).value;
      EXPECT_NEAR(res.profile.values()[i], ref, 1e-6 * std::abs(ref)) << av << " " << o.nodes[i];
    }
  }
}

TEST(VariationOfParameters, RejectsSlowDecay) {
  EXPECT_THROW(variation_of_parameters(2.0 / 3.0, [](double s) { return 1.0 / s; }), Error);
  EXPECT_THROW(variation_of_parameters(1.0, [](double) { return 0.0; }), Error);
}
