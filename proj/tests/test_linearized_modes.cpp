#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "liouville/linearized_modes.hpp"
#include "oracles.hpp"

using namespace liouville;

namespace {

constexpr double kPi = std::numbers::pi;

// Fourier coefficient of order n of f(θ) sampled on `m` equispaced angles.
template <class F>
std::complex<double> fourier(F&& f, int n, int m = 64) {
  std::complex<double> acc = 0.0;
  for (int j = 0; j < m; ++j) {
    const double t = 2 * kPi * j / m;
    acc += f(t) * std::polar(1.0, -n * t);
  }
  return acc / double(m);
}

LocalData random_local(std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, 2.0);
  std::uniform_real_distribution<double> vd(1.0, 40.0);
  return LocalData::make(vd(rng), {nd(rng), nd(rng)}, Sym2{nd(rng), nd(rng), nd(rng)});
}

}  // namespace

TEST(KernelTriviality, GrowthExponentsMatchModeIndex) {
  for (double av : {0.5, 1.5, 2.5}) {
    const auto report = kernel_triviality_report(Alpha(av), 18.0, 3);
    EXPECT_TRUE(report.certified) << av;
    ASSERT_EQ(report.modes.size(), 3u);
    for (const auto& m : report.modes) {
      EXPECT_TRUE(m.window_ok);
      EXPECT_NEAR(m.exponent_at_zero, m.k, 0.05 * m.k) << av << " " << m.k;
      EXPECT_NEAR(m.exponent_at_infinity, m.k, 0.05 * m.k) << av << " " << m.k;
    }
  }
}

TEST(KernelTriviality, EulerBaselineIsExact) {
  TrivialityOptions o;
  o.with_bubble = false;
  const auto report = kernel_triviality_report(Alpha(0.5), 18.0, 4, o);
  for (const auto& m : report.modes) {
    EXPECT_NEAR(m.exponent_at_zero, m.k, 1e-8);
    EXPECT_NEAR(m.exponent_at_infinity, m.k, 1e-8);
  }
}

TEST(KernelTriviality, RejectsLargeModeCount) {
  EXPECT_THROW(kernel_triviality_report(Alpha(0.5), 18.0, 11), Error);
  EXPECT_THROW(kernel_triviality_report(Alpha(0.5), 18.0, 0), Error);
}

TEST(SolveGNumeric, MatchesClosedForm) {
  for (double av : {0.5, 1.5}) {
    const Alpha alpha(av);
    const double R = 1e3;
    const auto g = solve_g_numeric(alpha, 18.0, R);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double r = g.nodes()[i];
      if (r < 1e-2 || r > R / 10) continue;
      const double ref = eval_g(alpha, 18.0, r).value;
      EXPECT_NEAR(g.values()[i], ref, 1e-6 * std::abs(ref)) << av << " " << r;
    }
  }
  const auto g = solve_g_numeric(Alpha(0.5), 18.0, 1e3);
  EXPECT_NEAR(g.value_at(1.0), -1.0 / 6.0, 1e-6);
}

TEST(SolveGNumeric, EnvelopeAndLimits) {
  const Alpha alpha(0.5);
  const double v0 = 18.0;
  const auto g = solve_g_numeric(alpha, v0, 1e4);
  const double a = bubble_coefficient(alpha, v0);
  double sup = 0.0;
  for (double r : g.nodes()) sup = std::max(sup, (1 + r * r) / (1 + a * std::pow(r, alpha.beta())));
  const double bound = 1.05 * g_slope(alpha, v0) * sup;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double r = g.nodes()[i];
    EXPECT_LE(std::abs(g.values()[i]) * (1 + r * r) / r, bound) << r;
  }
  EXPECT_LT(std::abs(g.values().front()), 1e-3);
  EXPECT_LT(std::abs(g.values().back()), 1e-7);
}

TEST(SolveGNumeric, ZeroForcingGivesZero) {
  const auto g = solve_g_numeric(Alpha(0.5), 18.0, 1e3, 50, false);
  for (double v : g.values()) EXPECT_EQ(v, 0.0);
  EXPECT_THROW(solve_g_numeric(Alpha(0.5), 18.0, 100.0), Error);
}

TEST(Harmonics, EigenrelationByQuadrature) {
  for (auto h : {Harmonic::cos2_minus_half, Harmonic::sin2_minus_half, Harmonic::cos_sin}) {
    const int m = 256;
    const double step = 1e-3;
    double lhs = 0.0, rhs = 0.0;
    for (int j = 0; j < m; ++j) {
      const double t = 2 * kPi * j / m;
      auto f = [&](double x) { return eval_harmonic(h, x); };
      const double f2 = (-f(t - 2 * step) + 16 * f(t - step) - 30 * f(t) + 16 * f(t + step) - f(t + 2 * step)) /
                        (12 * step * step);
      lhs += f(t) * (-f2);
      rhs += 4 * f(t) * f(t);
    }
    lhs *= 2 * kPi / m;
    rhs *= 2 * kPi / m;
    EXPECT_NEAR(lhs, rhs, 1e-10) << harmonic_name(h);
  }
}

TEST(ForcingDecomposition, Reconstruction) {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> nd(0.0, 3.0);
  for (int trial = 0; trial < 50; ++trial) {
    const auto local = random_local(rng);
    const double delta = std::exp(-std::uniform_real_distribution<double>(1.0, 8.0)(rng));
    for (double av : {0.5, 1.5}) {
      const auto fd = ForcingDecomposition::make(Alpha(av), local, delta);
      for (int i = 0; i < 20; ++i) {
        const Vec2 y{nd(rng), nd(rng)};
        const double f1 = fd.F1(y);
        EXPECT_NEAR(f1, fd.F11(y) + fd.F12(y), 1e-12 * std::max(1e-300, delta * delta * dot(y, y) * 10));
        EXPECT_NEAR(f1, delta * delta * 0.5 * local.hess.quadratic_form(y), 1e-12 * delta * delta * dot(y, y) * 10);
        const double gp = fd.gradient_products(y);
        EXPECT_NEAR(fd.C11(y) + fd.C12(y), gp, 1e-10 * std::max(std::abs(gp), 1e-300));
      }
    }
  }
}

TEST(ForcingDecomposition, AngularPurityWithAlignedGradient) {
  const Alpha alpha(0.5);
  const auto local = LocalData::make(18.0, {1.3, 0.0}, Sym2{0.2, -0.7, 1.1});
  const auto fd = ForcingDecomposition::make(alpha, local, 1e-2);
  for (double r : {0.1, 1.0, 7.0}) {
    auto c11 = [&](double t) { return fd.C11({r * std::cos(t), r * std::sin(t)}); };
    auto c12 = [&](double t) { return fd.C12({r * std::cos(t), r * std::sin(t)}); };
    const double scale = std::abs(fourier(c11, 2)) + std::abs(fourier(c12, 0));
    for (int n = 0; n < 32; ++n) {
      if (n != 2) {
        EXPECT_LE(std::abs(fourier(c11, n)), 1e-12 * scale) << r << " " << n;
      }
      if (n != 0) {
        EXPECT_LE(std::abs(fourier(c12, n)), 1e-12 * scale) << r << " " << n;
      }
    }
    EXPECT_GT(std::abs(fourier(c11, 2)), 0.0);
  }
}

TEST(ForcingDecomposition, GeneralGradientIsRotatedToFirstAxis) {
  const Alpha alpha(0.5);
  const auto local = LocalData::make(18.0, {0.6, 0.8}, Sym2{1.0, 0.3, -0.5});
  const auto fd = ForcingDecomposition::make(alpha, local, 1e-2);
  EXPECT_NEAR(fd.frame_angle, std::atan2(0.8, 0.6), 1e-15);
  EXPECT_NEAR(fd.hess_aligned.xx + fd.hess_aligned.yy, 0.5, 1e-14);
  // C11 peaks along the gradient direction.
  const Vec2 along{0.6, 0.8}, across{-0.8, 0.6};
  EXPECT_NEAR(fd.C11(along), -fd.C11(across), 1e-16);
}

TEST(SecondOrderForcing, DecayAtInfinity) {
  for (double av : {0.5, 1.5}) {
    const Alpha alpha(av);
    const auto e = SecondOrderForcing::make(alpha, LocalData::make(18.0, {1.0, 0.0}, Sym2{2.0, 0.0, 2.0}), 1e-2);
    std::vector<std::pair<double, double>> pairs;
    for (double r : log_grid(1e2, 1e4, 21)) pairs.emplace_back(r, e(r));
    EXPECT_NEAR(fit_scaling_exponent(pairs).slope, -2.0 - 2.0 * av, 0.05 * (2.0 + 2.0 * av));
    EXPECT_NEAR(e(5.0) / SecondOrderForcing::make(alpha, LocalData::make(18.0, {1.0, 0.0}, Sym2{2.0, 0.0, 2.0}), 2e-2)(5.0),
                0.25, 1e-14);
  }
}

TEST(ForcingEnvelope, AcceptsModelShapesAndRejectsSlowDecay) {
  const Alpha alpha(0.5);
  const auto good = check_forcing_envelope(alpha, 18.0, [&](double r) { return hessian_radial_factor(alpha, 18.0, r); },
                                           1e-4, 1e2);
  EXPECT_TRUE(good.ok);
  EXPECT_NEAR(good.constant, 1.0, 1e-12);
  EXPECT_TRUE(check_forcing_envelope(alpha, 18.0, [&](double r) { return gradient_radial_factor(alpha, 18.0, r); },
                                     1e-4, 1e2)
                  .ok);
  EXPECT_FALSE(check_forcing_envelope(alpha, 18.0, [](double r) { return r; }, 1e-4, 1e2).ok);
  EXPECT_FALSE(check_forcing_envelope(alpha, 18.0, [](double r) { return r * r; }, 1e-4, 1e2).ok);
}

TEST(BuildCorrection, VanishesWithoutData) {
  const Alpha alpha(0.5);
  const auto p = BubbleParams::with_scale(alpha, 18.0, 1e-2);
  const auto c = build_correction_c(alpha, LocalData::make(18.0), p, 100.0);
  EXPECT_TRUE(c.pieces().empty());
  EXPECT_EQ(c({0.3, 4.0}), 0.0);
  EXPECT_EQ(c.mode_residual(), 0.0);
}

TEST(BuildCorrection, ModeResidualAndEnvelopeStability) {
  const Alpha alpha(0.5);
  const double delta = 1e-2;
  const auto p = BubbleParams::with_scale(alpha, 18.0, delta);
  const auto local = LocalData::make(18.0, {}, Sym2{1.0, 0.0, -1.0});
  const auto c1 = build_correction_c(alpha, local, p, 1.0 / delta);
  const auto c2 = build_correction_c(alpha, local, p, 2.0 / delta);
  EXPECT_LE(c1.mode_residual(), 1e-6 * delta * delta);
  EXPECT_LE(c2.mode_residual(), 1e-6 * delta * delta);
  const double e1 = c1.envelope_constant(), e2 = c2.envelope_constant();
  EXPECT_TRUE(std::isfinite(e1));
  EXPECT_GT(e1, 0.0);
  EXPECT_LE(std::abs(e2 - e1), 0.10 * e1);
}

TEST(BuildCorrection, AssembledFieldSolvesThePlanarEquation) {
  // Δc + |y|^{2α} V0 e^U c + C11 + |y|^{2α} F11 e^U = 0, checked with a
  // 4th-order polar stencil on the assembled field: |y|^2 Δ = ∂_t^2 + ∂_θ^2.
  const Alpha alpha(0.5);
  const double v0 = 18.0, delta = 1e-2;
  const auto p = BubbleParams::with_scale(alpha, v0, delta);
  const auto local = LocalData::make(v0, {0.6, 0.8}, Sym2{1.0, 0.3, -0.5});
  const auto c = build_correction_c(alpha, local, p, 1.0 / delta);
  const auto& fd = c.forcing();
  const double H = 0.02;
  for (double r : {0.2, 0.7, 1.3, 3.0, 9.0}) {
    for (double th : {0.1, 1.0, 2.2, 4.0}) {
      auto at = [&](double t, double a) { return c({std::exp(t) * std::cos(a), std::exp(t) * std::sin(a)}); };
      const double t = std::log(r);
      auto d2 = [&](auto f) {
        return (-f(-2 * H) + 16 * f(-H) - 30 * f(0.0) + 16 * f(H) - f(2 * H)) / (12 * H * H);
      };
      const double ctt = d2([&](double e) { return at(t + e, th); });
      const double caa = d2([&](double e) { return at(t, th + e); });
      const Vec2 y{r * std::cos(th), r * std::sin(th)};
      const double lap = (ctt + caa) / (r * r);
      const double w = oracle::bubble_weight(0.5, v0, r);
      const double terms[] = {lap, w * c(y), fd.C11(y), w / v0 * fd.F11(y)};
      EXPECT_LT(oracle::scaled_sum(terms[0] / (delta * delta), terms[1] / (delta * delta),
                                   terms[2] / (delta * delta), terms[3] / (delta * delta)),
                1e-5)
          << r << " " << th;
    }
  }
}

TEST(BuildCorrection, RadialHessianPiecesCancel) {
  const Alpha alpha(0.5);
  const auto p = BubbleParams::with_scale(alpha, 18.0, 1e-2);
  const auto c = build_correction_c(alpha, LocalData::make(18.0, {}, Sym2{2.0, 0.0, 2.0}), p, 100.0);
  for (double r : {0.1, 1.0, 10.0}) EXPECT_NEAR(c({r * 0.3, r * 0.7}), 0.0, 1e-18);
}

TEST(BuildCorrection, RejectsMismatchedBubble) {
  const Alpha alpha(0.5);
  const auto p = BubbleParams::with_scale(alpha, 17.0, 1e-2);
  EXPECT_THROW(build_correction_c(alpha, LocalData::make(18.0), p, 100.0), Error);
}
