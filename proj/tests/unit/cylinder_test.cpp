#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "yamabe/yamabe.hpp"

using namespace yamabe;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// u = k constant on S^1(L) x S^2: R = 2 k^{-4}, volume k^6 4 pi L = 1.
double constant_lambda_n3(double length) { return 2.0 * std::pow(4.0 * std::numbers::pi * length, 2.0 / 3.0); }

int count_maxima(const std::vector<double>& u) {
  int c = 0;
  const std::size_t n = u.size();
  for (std::size_t k = 0; k < n; ++k)
    if (u[k] > u[(k + n - 1) % n] && u[k] >= u[(k + 1) % n]) ++c;
  return c;
}

} // namespace

TEST(CylinderEquation, Constants) {
  const CylinderEquation eq(3);
  EXPECT_DOUBLE_EQ(eq.a, 8.0);
  EXPECT_DOUBLE_EQ(eq.rc, 2.0);
  EXPECT_DOUBLE_EQ(eq.p, 5.0);
  EXPECT_NEAR(eq.bifurcation_length(), kTwoPi, 1e-15);
  EXPECT_NEAR(CylinderEquation(4).bifurcation_length(), kTwoPi / std::sqrt(2.0), 1e-15);
  EXPECT_THROW(CylinderEquation(2), DomainError);
}

TEST(CylinderConstantBranch, ShootingGaugeAndUnitVolume) {
  for (double L : {3.0, kTwoPi, 9.5}) {
    const auto b = cylinder_constant_branch(L, 3, 64);
    EXPECT_EQ(b.kind, BranchKind::constant);
    EXPECT_EQ(b.humps, 0);
    EXPECT_DOUBLE_EQ(b.lambda_shooting, 2.0);
    EXPECT_NEAR(b.lambda, constant_lambda_n3(L), 1e-12 * constant_lambda_n3(L));
    EXPECT_NEAR(CylinderEquation(3).volume(b.profile, L), 1.0, 1e-13);
  }
  const auto viaShoot = cylinder_shoot(7.0, 3, 1.0, 0.0);
  ASSERT_TRUE(viaShoot.point);
  EXPECT_EQ(viaShoot.point->kind, BranchKind::constant);
}

TEST(CylinderShoot, NonconstantBelowConstantAboveThreshold) {
  const double L = kTwoPi + 0.5;
  const auto r = cylinder_shoot(L, 3, 1.2, 0.0);
  ASSERT_TRUE(r.point) << r.message;
  const auto& b = *r.point;
  EXPECT_EQ(b.kind, BranchKind::nonconstant);
  EXPECT_LE(b.closure_u, 1e-8);
  EXPECT_LE(b.closure_du, 1e-8);
  EXPECT_LT(b.lambda, constant_lambda_n3(L));
  EXPECT_GT(b.amplitude, 1.0);
  EXPECT_LT(b.amplitude, CylinderEquation(3).homoclinic_amplitude());
  EXPECT_NEAR(CylinderEquation(3).volume(b.profile, L), 1.0, 1e-12);
  EXPECT_EQ(count_maxima(b.profile), 1);
  // maximum at t = 0 and the profile is even about it
  const auto& u = b.profile;
  EXPECT_EQ(std::max_element(u.begin(), u.end()) - u.begin(), 0);
  for (std::size_t k = 1; k < u.size(); ++k) EXPECT_NEAR(u[k], u[u.size() - k], 1e-8);
}

TEST(CylinderShoot, NoOrbitBelowThreshold) {
  const auto r = cylinder_shoot(kTwoPi - 0.3, 3, 1.2, 0.0);
  EXPECT_FALSE(r.point);
  EXPECT_FALSE(r.message.empty());
  EXPECT_GT(r.closest_miss, 0.0);
}

TEST(CylinderShoot, TwoHumpOrbit) {
  ShootOptions opts;
  opts.humps = 2;
  const double L = 2 * kTwoPi + 1.0;
  const auto r = cylinder_shoot(L, 3, 1.2, 0.0, opts);
  ASSERT_TRUE(r.point) << r.message;
  EXPECT_EQ(r.point->humps, 2);
  EXPECT_EQ(count_maxima(r.point->profile), 2);
  const auto one = cylinder_shoot(L, 3, 1.2, 0.0);
  ASSERT_TRUE(one.point);
  EXPECT_LT(one.point->lambda, r.point->lambda);
  // two humps of length L are one hump of length L/2, repeated
  EXPECT_FALSE(cylinder_shoot(kTwoPi + 1.0, 3, 1.2, 0.0, opts).point);
}

TEST(CylinderShoot, RejectsBadInput) {
  EXPECT_THROW(cylinder_shoot(-1.0, 3, 1.2, 0.0), DomainError);
  EXPECT_THROW(cylinder_shoot(7.0, 3, -1.0, 0.0), DomainError);
  ShootOptions zero;
  zero.humps = 0;
  EXPECT_THROW(cylinder_shoot(7.0, 3, 1.2, 0.0, zero), DomainError);
  // energy above the separatrix: not a periodic start
  const auto far = cylinder_shoot(7.0, 3, 3.0, 0.0);
  EXPECT_FALSE(far.point);
}

TEST(CylinderShoot, RandomLengthsCloseAndLiftToCsc) {
  auto rng = seeded_stream(31, 0);
  for (int trial = 0; trial < 5; ++trial) {
    const double L = uniform_in(rng, kTwoPi + 0.05, 10.0);
    // below the separatrix amplitude 3^{1/4}
    const double u0 = uniform_in(rng, 1.02, 1.3);
    const auto r = cylinder_shoot(L, 3, u0, 0.0);
    ASSERT_TRUE(r.point) << "L = " << L << ": " << r.message;
    EXPECT_LE(std::max(r.point->closure_u, r.point->closure_du), 1e-8);
    EXPECT_LT(r.point->lambda, constant_lambda_n3(L));
    // The lifted residual applies the discrete u'' to the ODE profile; u^{-p} in the valleys
    // amplifies the profile's ~1e-13 noise, so this is looser than the descent invariant.
    double lambda = 0.0;
    EXPECT_LE(cylinder_csc_residual(lift_to_cylinder(*r.point), &lambda), 1e-4) << "L = " << L;
    EXPECT_NEAR(lambda, r.point->lambda, 1e-8 * r.point->lambda);
  }
}

TEST(CylinderShoot, DimensionFour) {
  const CylinderEquation eq(4);
  const auto r = cylinder_shoot(eq.bifurcation_length() + 0.5, 4, 1.1, 0.0);
  ASSERT_TRUE(r.point) << r.message;
  EXPECT_LE(cylinder_csc_residual(lift_to_cylinder(*r.point)), 1e-4);
}

TEST(CylinderCscResidual, ConstantProfileIsExact) {
  const auto b = cylinder_constant_branch(5.0, 3, 32);
  double lambda = 0.0;
  EXPECT_LE(cylinder_csc_residual(lift_to_cylinder(b), &lambda), 1e-12);
  EXPECT_NEAR(lambda, b.lambda, 1e-12 * b.lambda);
  EXPECT_THROW(cylinder_csc_residual(ScalarField::constant(GridChart::periodic(3, 8), 1.0)), UnsupportedChartError);
}

TEST(LinearizedMode, ChangesSignAtThreshold) {
  EXPECT_GT(linearized_mode_eigenvalue(kTwoPi - 0.1, 3), 0.0);
  EXPECT_LT(linearized_mode_eigenvalue(kTwoPi + 0.1, 3), 0.0);
}

TEST(BifurcationScan, LocatesThresholdAndCountsBranches) {
  const auto scan = bifurcation_scan(4.0, 10.0, 24, 3, 512);
  ASSERT_TRUE(scan.bifurcation_length);
  EXPECT_LT(std::abs(*scan.bifurcation_length - kTwoPi) / kTwoPi, 0.01);
  ASSERT_EQ(scan.lengths.size(), 25u);
  ASSERT_EQ(scan.branch_counts.size(), 25u);
  for (std::size_t i = 0; i < scan.lengths.size(); ++i) {
    if (i > 0) EXPECT_GE(scan.branch_counts[i], scan.branch_counts[i - 1]);
    if (scan.lengths[i] < *scan.bifurcation_length) EXPECT_EQ(scan.branch_counts[i], 1) << scan.lengths[i];
    if (scan.lengths[i] > kTwoPi + 0.1) EXPECT_GE(scan.branch_counts[i], 2) << scan.lengths[i];
  }
  std::size_t total = 0;
  for (int c : scan.branch_counts) total += static_cast<std::size_t>(c);
  EXPECT_EQ(scan.points.size(), total);
  EXPECT_THROW(bifurcation_scan(5.0, 4.0, 3, 3), DomainError);
}

TEST(CylinderDescent, ConstantStartStaysConstant) {
  SolverOptions opts;
  opts.max_iter = 20000;
  const auto sol = minimize_on_cylinder(3, 5.0, 128, opts);
  ASSERT_TRUE(sol.converged) << sol.message;
  EXPECT_FALSE(sol.metric);
  EXPECT_NEAR(sol.lambda, constant_lambda_n3(5.0), 1e-9 * constant_lambda_n3(5.0));
}

TEST(CylinderMultiStart, OneSolutionBelowThresholdTwoAbove) {
  SolverOptions opts;
  opts.max_iter = 20000;
  const auto below = multi_start_cylinder(3, 5.98, 256, 5, 11, opts);
  std::size_t converged = 0;
  for (const auto& s : below.solutions) converged += s.converged ? 1 : 0;
  EXPECT_EQ(converged, 1u);

  const auto above = multi_start_cylinder(3, 8.0, 256, 5, 11, opts);
  converged = 0;
  for (const auto& s : above.solutions) converged += s.converged ? 1 : 0;
  ASSERT_EQ(converged, 2u);
  // reduced solutions lifted to the product chart are CSC there
  for (const auto& s : above.solutions) EXPECT_LE(cylinder_csc_residual(s.phi), 1e-6);
  // lowest is the one-hump branch from shooting, highest the constant one
  const auto shot = cylinder_shoot(8.0, 3, 1.2, 0.0);
  ASSERT_TRUE(shot.point);
  EXPECT_NEAR(above.solutions[0].lambda, shot.point->lambda, 1e-6 * shot.point->lambda);
  EXPECT_NEAR(above.solutions[1].lambda, constant_lambda_n3(8.0), 1e-8 * constant_lambda_n3(8.0));
}

TEST(AlignMaximum, ShiftsPeakToOrigin) {
  const int n = 64;
  const double period = 3.0;
  std::vector<double> u(n);
  for (int k = 0; k < n; ++k) u[k] = 2.0 + std::cos(kTwoPi * (k * period / n - 0.77) / period);
  const auto a = align_maximum_to_origin(u, period);
  for (int k = 0; k < n; ++k) EXPECT_NEAR(a[k], 2.0 + std::cos(kTwoPi * k / n), 1e-10);
}
