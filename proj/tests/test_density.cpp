#include <gtest/gtest.h>

#include <cmath>

#include "qhalf/density.hpp"

using namespace qhalf;
using namespace qhalf::holo;

namespace {

const std::vector<double> kRadii{0.04, 0.02, 0.01, 0.005};

// Brute-force midpoint mass of G^{-1}(B_r(p)) over an n x n box around z0.
double brute_mass(const BranchedSurface& S, cplx z0, const C2& p, double r, double half, int n) {
  const double hc = 2 * half / n;
  double m = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const cplx z = z0 + cplx(-half + (i + 0.5) * hc, -half + (j + 0.5) * hc);
      if (S.contains(z) && dist(S.G(z), p) <= r) m += S.jacobian(z);
    }
  return m * hc * hc;
}

}  // namespace

TEST(BranchedSurface, JacobianIsAreaElement) {
  const BranchedSurface S;
  for (cplx z : {cplx(0.6, 0.3), cplx(0.1, -0.9), cplx(1.0, 0.2), cplx(0.02, 0.05)})
    EXPECT_NEAR(S.jacobian_real(z) / S.jacobian(z), 1.0, 1e-6) << z;
  EXPECT_EQ(S.jacobian(0.0), 0.0);
}

TEST(BranchedSurface, GammaRunsAlongSigmaThenTheRoundedSide) {
  const BranchedSurface S;
  EXPECT_NEAR(std::abs(S.gamma(0.0) - cplx(0.0, -S.tau())), 0.0, 1e-15);
  for (double t = 0.0; t < 1.0; t += 0.01) EXPECT_NEAR(S.sdf(S.gamma(t)), 0.0, 1e-12) << t;
  EXPECT_LT(S.sdf(std::polar(1.0, kPi / 6)), 0.0);
  EXPECT_EQ(S.sdf(cplx(0.0, -1.0)), 0.0);
}

TEST(Density, MassMatchesBruteForce) {
  const BranchedSurface S;
  const cplx z0(0.6, 0.3);
  const C2 p = S.G(z0);
  const double r = 0.04;
  int leaves = 0;
  const double adaptive = holo::detail::surface_mass(S, p, r, 24.0, leaves);
  const double half = 2.0 * r / std::sqrt(S.jacobian(z0));
  EXPECT_NEAR(adaptive / brute_mass(S, z0, p, r, half, 1200), 1.0, 2e-3);
}

TEST(Density, InteriorImmersionPoint) {
  const BranchedSurface S;
  const DensityReport d = density_at(S, S.G(cplx(0.6, 0.3)), kRadii);
  EXPECT_NEAR(d.limit, 1.0, 0.03);
}

TEST(Density, DoublePointOnTheBoundary) {
  const BranchedSurface S;
  const DensityReport d = density_at(S, {cplx(0.0, 1.0), 0.0}, kRadii);
  EXPECT_NEAR(d.limit, 1.5, 0.075);
  for (std::size_t k = 1; k < d.ratio.size(); ++k) EXPECT_LE(d.ratio[k - 1], d.ratio[k] * 1.01);
}

TEST(Density, BoundaryRegularPoint) {
  const BranchedSurface S;
  const DensityReport d = density_at(S, S.G(cplx(0.0, S.tau0) + std::polar(S.rho, 0.4)), kRadii);
  EXPECT_NEAR(d.limit, 0.5, 0.025);
}

TEST(Density, AtLeastHalfAlongTheBoundary) {
  const BranchedSurface S;
  for (double t = 0.03; t < 1.0; t += 0.0625) {
    const cplx z = S.gamma(t);
    if (z.real() == 0.0 && std::abs(z.imag()) < 0.3) continue;  // flat branch point region
    const DensityReport d = density_at(S, S.G(z), {0.02, 0.01});
    EXPECT_GE(d.limit, 0.5 * 0.95) << z;
    EXPECT_LE(d.ratio[0], d.ratio[1] * 1.01) << z;
  }
}

TEST(Density, Errors) {
  const BranchedSurface S;
  EXPECT_THROW(density_at(S, S.G(0.5), {1e-8, 5e-9}), ResolutionError);
  EXPECT_THROW(density_at(S, S.G(0.5), {-0.1, 0.1}), DomainError);
  EXPECT_THROW(density_at(S, S.G(0.5), {0.1}), DomainError);
  EXPECT_THROW(density_at(BranchedSurface{.alpha = 1.5}, S.G(0.5), {0.1, 0.05}), DomainError);
}

TEST(BoundaryCurve, InjectiveWithCertifiedDoublePoints) {
  const BranchedSurface S;
  const CurveReport c = boundary_curve(S, 20000);
  EXPECT_TRUE(c.scan.injective) << c.scan.min_separation;
  EXPECT_GT(c.scan.min_separation, 1e-8);
  bool saw_n0 = false;
  for (const auto& dp : c.double_points) {
    EXPECT_TRUE(dp.ok) << dp.n << " " << dp.sign;
    if (dp.n == 0 && dp.sign == 1) {
      saw_n0 = true;
      EXPECT_NEAR(std::abs(dp.z1 - cplx(0.0, -1.0)), 0.0, 1e-15);
      EXPECT_NEAR(std::abs(dp.z2 - std::polar(1.0, kPi / 6)), 0.0, 1e-15);
      EXPECT_LE(dp.image_gap, 1e-10);
    }
  }
  EXPECT_TRUE(saw_n0);
}

TEST(BoundaryCurve, ScanFindsACrossing) {
  // A figure eight in the first complex coordinate.
  std::vector<C2> pts;
  for (int i = 0; i < 4001; ++i) {
    const double t = 2 * kPi * i / 4001;
    pts.push_back({cplx(std::sin(t), std::sin(t) * std::cos(t)), 0.0});
  }
  EXPECT_FALSE(scan_collisions(pts, 1e-8).injective);
  std::vector<C2> circle;
  for (int i = 0; i < 4000; ++i) circle.push_back({std::polar(1.0, 2 * kPi * i / 4000), 0.0});
  EXPECT_TRUE(scan_collisions(circle, 1e-8).injective);
}

TEST(TwoCircles, DensityOnTheInnerCircle) {
  for (auto [R1, R2] : {std::pair{1.0, 2.0}, std::pair{0.3, 0.35}, std::pair{2.0, 10.0}}) {
    const TwoCirclesReport t = two_circles_density(R1, R2, R1);
    EXPECT_EQ(t.expected, 1.5);
    EXPECT_NEAR(t.limit, 1.5, 0.015);
    EXPECT_NEAR(t.exact.back(), 1.5, 0.015);
    EXPECT_LE(t.max_numeric_gap, 2e-3);
  }
}

TEST(TwoCircles, InsideAndBetween) {
  EXPECT_NEAR(two_circles_density(1.0, 2.0, 0.5).limit, 2.0, 1e-12);
  EXPECT_NEAR(two_circles_density(1.0, 2.0, 1.5).limit, 1.0, 1e-12);
  EXPECT_THROW(two_circles_density(2.0, 1.0, 1.0), DomainError);
}

TEST(TwoCircles, LensAreaLimits) {
  EXPECT_NEAR(lens_area(0.0, 1.0, 0.5), kPi * 0.25, 1e-15);
  EXPECT_EQ(lens_area(3.0, 1.0, 0.5), 0.0);
  // Equal disks through each other's centres.
  EXPECT_NEAR(lens_area(1.0, 1.0, 1.0), 2 * kPi / 3 - std::sqrt(3.0) / 2, 1e-14);
}
