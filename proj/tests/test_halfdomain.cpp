#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "qhalf/distance_field.hpp"
#include "qhalf/halfdomain.hpp"

using namespace qhalf;

TEST(HalfDomain, StraightHalvesAreBalanced) {
  auto dom = build_halfdisk(1.0, InterfaceSpec::flat(), 1.0 / 64);
  std::size_t plus = 0, minus = 0, iface = 0;
  for (std::size_t id = 0; id < dom->size(); ++id) {
    const NodeTag t = dom->tag(id);
    if (t == NodeTag::InteriorPlus || t == NodeTag::OuterPlus) ++plus;
    if (t == NodeTag::InteriorMinus || t == NodeTag::OuterMinus) ++minus;
    if (t == NodeTag::Interface) {
      ++iface;
      EXPECT_EQ(dom->node(id).y, 0.0);
    }
  }
  EXPECT_EQ(plus, minus);
  EXPECT_EQ(iface, 129u);
  EXPECT_EQ(plus + minus + iface, dom->size());
}

TEST(HalfDomain, TagsPartitionNodes) {
  auto dom = build_halfdisk(1.0, InterfaceSpec::sine(0.05, 3.0), 1.0 / 32);
  std::size_t total = 0;
  for (NodeTag t : {NodeTag::InteriorPlus, NodeTag::InteriorMinus, NodeTag::Interface, NodeTag::OuterPlus,
                    NodeTag::OuterMinus})
    total += dom->count(t);
  EXPECT_EQ(total, dom->size());
  for (std::size_t id = 0; id < dom->size(); ++id) {
    const NodeTag t = dom->tag(id);
    bool has_outside = false;
    for (int k = 0; k < 4; ++k) has_outside |= dom->neighbour(id, k) < 0;
    if (t == NodeTag::InteriorPlus || t == NodeTag::InteriorMinus) EXPECT_FALSE(has_outside);
    if (t == NodeTag::OuterPlus || t == NodeTag::OuterMinus) EXPECT_TRUE(has_outside);
  }
}

TEST(HalfDomain, ParabolaInterfaceNodesHugTheCurve) {
  const double h = 1.0 / 64;
  auto dom = build_halfdisk(1.0, InterfaceSpec::parabola(0.1), h);
  std::set<int> columns;
  for (std::size_t id = 0; id < dom->size(); ++id) {
    if (dom->tag(id) != NodeTag::Interface) continue;
    const Point2 p = dom->node(id);
    EXPECT_LE(std::abs(p.y - 0.1 * p.x * p.x), h);
    columns.insert(dom->grid_i(id));
  }
  // Consecutive columns, so gamma is sampled with spacing at most h in x.
  EXPECT_EQ(static_cast<int>(columns.size()), *columns.rbegin() - *columns.begin() + 1);
  EXPECT_GE(columns.size(), 125u);
}

TEST(HalfDomain, SteepInterfaceFailsTransversality) {
  // psi'(0) = 2; psi = 2x - 2x^3 meets the unit circle at about 14 degrees.
  EXPECT_THROW(build_halfdisk(1.0, InterfaceSpec::cubic(2.0, 0.0, -2.0), 1.0 / 64), ConstructionError);
  auto ok = build_halfdisk(1.0, InterfaceSpec::cubic(0.0, 0.0, -0.2), 1.0 / 64);
  EXPECT_GT(std::min(ok->crossing_angles().first, ok->crossing_angles().second), 30.0);
}

TEST(HalfDomain, RejectsCoarseSpacing) {
  EXPECT_THROW(build_halfdisk(1.0, InterfaceSpec::flat(), 0.2), DomainError);
  EXPECT_THROW(build_halfdisk(1.0, InterfaceSpec::graph(
                                       "shifted", [](double x) { return 0.1 + x; }, [](double) { return 1.0; },
                                       [](double) { return 0.0; }, [](double) { return 0.0; }),
                              0.05),
               ConstructionError);
}

TEST(DistanceField, StraightIsExactlyEuclidean) {
  auto dom = build_halfdisk(1.0, InterfaceSpec::flat(), 1.0 / 64);
  const DistanceField f = build_distance_field(dom);
  for (std::size_t id = 0; id < dom->size(); ++id) {
    const Point2 p = dom->node(id);
    const double r = std::sqrt(p.x * p.x + p.y * p.y);
    EXPECT_EQ(f.d[id], r);
    if (r > 0) {
      EXPECT_EQ(f.grad[id][0], p.x / r);
      EXPECT_EQ(f.grad[id][1], p.y / r);
    }
  }
  const DistanceReport rep = validate_distance_field(f);
  EXPECT_TRUE(rep.all_ok());
  EXPECT_EQ(rep.measured.value, 0.0);
  EXPECT_EQ(rep.measured.gradient, 0.0);
  EXPECT_EQ(rep.measured.hessian, 0.0);
  EXPECT_EQ(rep.measured.tangency, 0.0);
  EXPECT_EQ(rep.c_mono, 0.0);
}

TEST(DistanceField, ParabolaGradientIsTangentToInterface) {
  auto dom = build_halfdisk(1.0, InterfaceSpec::parabola(0.1), 1.0 / 64);
  const DistanceField f = build_distance_field(dom);
  EXPECT_LE(f.defects.tangency, 1e-6);
  // Independent check: at points (x, 0.1 x^2), grad d . (-0.2x, 1) = 0.
  for (double x = -0.95; x <= 0.95; x += 0.01) {
    if (std::abs(x) < 1e-9) continue;
    const auto g = f.map->eval({x, 0.1 * x * x}).grad;
    const double nx = -0.2 * x, ny = 1.0, len = std::hypot(nx, ny);
    EXPECT_LE(std::abs(g[0] * nx + g[1] * ny) / len, 1e-6) << "x = " << x;
  }
  const DistanceReport rep = validate_distance_field(f);
  EXPECT_TRUE(rep.all_ok());
  EXPECT_GT(rep.c_mono, 0.0);
}

TEST(DistanceField, ArclengthMatchesQuadrature) {
  ModifiedDistance md(InterfaceSpec::parabola(0.1));
  // Arclength of y = 0.1 x^2 from 0 to 1: closed form with a = 0.2.
  const double a = 0.2;
  const double exact = (a * std::sqrt(1 + a * a) + std::asinh(a)) / (2 * a);
  EXPECT_NEAR(md.arclength(1.0), exact, 1e-13);
  EXPECT_NEAR(md.arclength(-1.0), -exact, 1e-13);
}

TEST(DistanceField, GradientMatchesFiniteDifferences) {
  ModifiedDistance md(InterfaceSpec::sine(0.05, 3.0));
  for (Point2 p : {Point2{0.3, 0.2}, Point2{-0.5, -0.4}, Point2{0.7, 0.05}, Point2{0.1, -0.6}}) {
    const double e = 1e-6;
    const double gx = (md.eval({p.x + e, p.y}).d - md.eval({p.x - e, p.y}).d) / (2 * e);
    const double gy = (md.eval({p.x, p.y + e}).d - md.eval({p.x, p.y - e}).d) / (2 * e);
    const auto g = md.eval(p).grad;
    EXPECT_NEAR(g[0], gx, 1e-7);
    EXPECT_NEAR(g[1], gy, 1e-7);
  }
}

TEST(DistanceField, DefectConstantsStableUnderRefinement) {
  std::vector<DistanceReport> reps;
  for (double h : {1.0 / 16, 1.0 / 32, 1.0 / 64}) {
    auto dom = build_halfdisk(1.0, InterfaceSpec::parabola(0.1), h);
    reps.push_back(validate_distance_field(build_distance_field(dom)));
  }
  for (std::size_t k = 1; k < reps.size(); ++k) {
    EXPECT_LE(reps[k].measured.value, 1.5 * reps[0].measured.value + 1e-3);
    EXPECT_LE(reps[k].measured.gradient, 1.5 * reps[0].measured.gradient + 1e-3);
    EXPECT_LE(reps[k].measured.hessian, 1.5 * reps[0].measured.hessian + 1e-3);
  }
}

TEST(DistanceField, SquaredDistanceFailsValueCheck) {
  auto dom = build_halfdisk(1.0, InterfaceSpec::flat(), 1.0 / 64);
  DistanceField f = build_distance_field(dom);
  for (double& v : f.d) v = v * v;
  const DistanceReport rep = validate_distance_field(f);
  EXPECT_FALSE(rep.value_ok);
  EXPECT_FALSE(rep.all_ok());
}
