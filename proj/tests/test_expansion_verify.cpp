#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "liouville/expansion_verify.hpp"

using namespace liouville;

namespace {

constexpr double kPi = std::numbers::pi;

}  // namespace

TEST(PolarGrid, Layout) {
  const PolarGrid g(1e-6, 1.0, 101, 64);
  EXPECT_DOUBLE_EQ(g.radius(0), 1e-6);
  EXPECT_NEAR(g.radius(100), 1.0, 1e-14);
  EXPECT_DOUBLE_EQ(g.angle(16), kPi / 2);
  const auto f = g.refined();
  EXPECT_EQ(f.n_radial(), 201u);
  EXPECT_EQ(f.n_angular(), 128u);
  EXPECT_NEAR(f.radius(2), g.radius(1), 1e-20);
  EXPECT_THROW(PolarGrid(1e-7, 1.0, 101, 64), Error);
  EXPECT_THROW(PolarGrid(1e-6, 1.0, 101, 63), Error);
  EXPECT_THROW(PolarGrid(1e-6, 1.0, 7, 64), Error);
}

TEST(PdeResidual, ExactBubbleIsDiscretizationOnly) {
  const Alpha alpha(0.5);
  const auto local = LocalData::make(18.0);
  const PolarGrid grid(1e-6, 1.0, 4000, 64);
  for (double u0 : {0.0, 16.0, 28.0}) EXPECT_LE(pde_residual(alpha, local, u0, 0, grid).norm, 1e-6) << u0;
}

TEST(PdeResidual, SecondOrderStencilQuartersUnderRefinement) {
  const Alpha alpha(0.5);
  const auto local = LocalData::make(18.0);
  const PolarGrid grid(1e-6, 1.0, 600, 64);
  const double coarse = pde_residual(alpha, local, 20.0, 0, grid, 2).norm;
  const double fine = pde_residual(alpha, local, 20.0, 0, grid.refined(), 2).norm;
  EXPECT_NEAR(coarse / fine, 4.0, 0.8) << coarse << " " << fine;
}

TEST(PdeResidual, CovariantUnderRotation) {
  const Alpha alpha(0.5);
  const PolarGrid grid(1e-6, 1.0, 1500, 64);
  const auto local = LocalData::make(18.0, {1.0, 0.0}, Sym2{1.0, 0.2, -0.4});
  for (double angle : {0.3, 1.7}) {
    const auto rot = LocalData::make(18.0, rotate(local.grad, angle), rotate_into_frame(local.hess, -angle));
    for (int order : {0, 1, 2}) {
      const double a = pde_residual(alpha, local, 20.0, order, grid).norm;
      const double b = pde_residual(alpha, rot, 20.0, order, grid.rotated(angle)).norm;
      EXPECT_NEAR(a, b, 1e-10 * a) << angle << " " << order;
    }
  }
}

TEST(PdeResidual, FirstOrderTermRemovesGradientForcing) {
  const Alpha alpha(0.5);
  const PolarGrid grid(1e-6, 1.0, 4000, 64);
  const auto local = LocalData::make(18.0, {1.0, 0.0});
  const double r0 = pde_residual(alpha, local, 20.0, 0, grid).norm;
  const double r1 = pde_residual(alpha, local, 20.0, 1, grid).norm;
  EXPECT_LT(r1, 0.1 * r0);
}

TEST(PdeResidual, RejectsBadArguments) {
  const Alpha alpha(0.5);
  const PolarGrid grid(1e-6, 1.0, 100, 64);
  EXPECT_THROW(pde_residual(alpha, LocalData::make(18.0), 0.0, 3, grid), Error);
  EXPECT_THROW(pde_residual(alpha, LocalData::make(18.0), 0.0, 0, grid, 6), Error);
}

TEST(GreenDisk, CenterValue) {
  EXPECT_NEAR(green_disk(1.0, {0, 0}, {0.5, 0}), std::log(2.0) / (2 * kPi), 1e-15);
  EXPECT_NEAR(green_disk(1.0, {0, 0}, {0.5, 0}), 0.1103178, 1e-7);
  EXPECT_NEAR(green_disk(1.0, {1e-9, 0}, {0.5, 0}), 0.1103178, 1e-7);
}

TEST(GreenDisk, VanishesOnBoundary) {
  for (int i = 0; i < 16; ++i) {
    const double t = 2 * kPi * i / 16;
    EXPECT_LE(std::abs(green_disk(1.0, {0.3, 0.2}, {std::cos(t), std::sin(t)})), 1e-10);
    EXPECT_LE(std::abs(green_disk(2.5, {0.3, -1.2}, {2.5 * std::cos(t), 2.5 * std::sin(t)})), 1e-10);
  }
}

TEST(GreenDisk, Symmetric) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> rad(0.0, 0.999), ang(0.0, 2 * kPi);
  for (int i = 0; i < 1000; ++i) {
    const double r1 = rad(rng), t1 = ang(rng), r2 = rad(rng), t2 = ang(rng);
    const Vec2 y{r1 * std::cos(t1), r1 * std::sin(t1)}, eta{r2 * std::cos(t2), r2 * std::sin(t2)};
    EXPECT_NEAR(green_disk(1.0, y, eta), green_disk(1.0, eta, y), 1e-12);
  }
}

TEST(GreenDisk, RejectsInvalidPoints) {
  EXPECT_THROW(green_disk(1.0, {0.1, 0.1}, {0.1, 0.1}), Error);
  EXPECT_THROW(green_disk(1.0, {1.1, 0.0}, {0.1, 0.1}), Error);
  EXPECT_THROW(green_disk(0.0, {0.0, 0.0}, {0.1, 0.1}), Error);
}

TEST(GreenIdentity, HoldsForShotSolutions) {
  const Alpha alpha(0.5);
  const auto H = RadialFunction::constant(18.0);
  const auto s5 = shoot_liouville(alpha, H, 5.0, 1.0);
  EXPECT_LE(green_identity_check(s5.u, alpha, H, 5.0).discrepancy, 1e-6);
  const auto s20 = shoot_liouville(alpha, H, 20.0, 1.0);
  EXPECT_LE(green_identity_check(s20.u, alpha, H, 20.0).discrepancy, 1e-4);
  const auto Hq = RadialFunction::quadratic(18.0, 1.0);
  const auto sq = shoot_liouville(alpha, Hq, 12.0, 1.0);
  EXPECT_LE(green_identity_check(sq.u, alpha, Hq, 12.0).discrepancy, 1e-6);
}

TEST(GreenIdentity, HarmonicConstantCase) {
  const auto nodes = log_grid(1e-3, 1.0, 50);
  const RadialProfile zero(nodes, std::vector<double>(50, 0.0), std::vector<double>(50, 0.0));
  EXPECT_EQ(green_identity_check(zero, Alpha(0.5), RadialFunction::constant(0.0), 0.0).discrepancy, 0.0);
}

TEST(ArgmaxDisplacement, RadialDataStaysAtOrigin) {
  for (double d : {1e-2, 1e-4}) EXPECT_EQ(argmax_radius(Alpha(0.5), LocalData::make(18.0), d), 0.0);
}

TEST(ArgmaxDisplacement, ExponentMatchesLaw) {
  const std::vector<double> deltas{1e-2, 1e-3, 1e-4, 1e-5};
  for (double av : {0.5, 1.5}) {
    const auto fit = argmax_displacement(Alpha(av), LocalData::make(18.0, {1.0, 0.0}), deltas);
    EXPECT_NEAR(fit.exponent, 1.0 / (2 * av + 1), 0.05) << av;
  }
  const auto neg = argmax_displacement(Alpha(0.5), LocalData::make(18.0, {-2.0, 0.0}), deltas);
  EXPECT_NEAR(neg.exponent, 0.5, 0.05);
}

TEST(ArgmaxDisplacement, RejectsDegenerateInput) {
  const std::vector<double> deltas{1e-2, 1e-3, 1e-4, 1e-5};
  EXPECT_THROW(argmax_displacement(Alpha(0.5), LocalData::make(18.0), deltas), Error);
  EXPECT_THROW(argmax_displacement(Alpha(0.5), LocalData::make(18.0, {1, 0}), {1e-2, 5e-3, 2e-3, 1e-3}), Error);
  EXPECT_THROW(argmax_displacement(Alpha(0.5), LocalData::make(18.0, {1, 0}), {1e-2, 1e-3, 1e-4}), Error);
}
