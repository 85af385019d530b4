#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "qhalf/linear_reference.hpp"
#include "qhalf/solver.hpp"

using namespace qhalf;

namespace {

BoundaryData sheets_of(std::function<double(Point2)> f, int q, std::function<double(Point2)> phi) {
  BoundaryData b;
  b.plus = [f, q](Point2 p) { return QPoint(q, 1, std::vector<double>(static_cast<std::size_t>(q), f(p))); };
  b.minus = [f, q](Point2 p) {
    return QPoint(std::max(q - 1, 1), 1, std::vector<double>(static_cast<std::size_t>(std::max(q - 1, 1)), f(p)));
  };
  b.phi = [phi](Point2 p) { return Vec{phi(p)}; };
  return b;
}

QHalfMap fill(std::shared_ptr<const HalfDomain> dom, int q, const std::function<double(Point2, int)>& f) {
  QHalfMap u(dom, q, 1);
  for (std::size_t id = 0; id < dom->size(); ++id) {
    const Point2 p = dom->node(id);
    const NodeTag t = dom->tag(id);
    std::vector<double> plus(static_cast<std::size_t>(q)), minus(static_cast<std::size_t>(q - 1));
    for (int i = 0; i < q; ++i) plus[i] = f(p, i);
    for (int i = 0; i < q - 1; ++i) minus[i] = f(p, i);
    if (plus_only(t)) u.set_plus(id, QPoint(q, 1, plus));
    if (minus_only(t) && q > 1) u.set_minus(id, QPoint(q - 1, 1, minus));
    if (t == NodeTag::Interface) u.set_interface(id, std::vector<double>{f(p, q - 1)}, minus);
  }
  return u;
}

}  // namespace

TEST(DirichletEnergy, ConstantMapIsZero) {
  auto dom = build_halfdisk(1.0, InterfaceSpec::flat(), 1.0 / 32);
  EXPECT_EQ(dirichlet_energy(fill(dom, 3, [](Point2, int) { return 0.7; })), 0.0);
}

TEST(DirichletEnergy, LinearFunctionConvergesToHalfDiskArea) {
  double previous = 1e9;
  for (double h : {1.0 / 32, 1.0 / 64, 1.0 / 128}) {
    auto dom = build_halfdisk(1.0, InterfaceSpec::flat(), h);
    const double e = dirichlet_energy(fill(dom, 1, [](Point2 p, int) { return p.x; }));
    const double err = std::abs(e - std::numbers::pi / 2);
    EXPECT_LT(err, 4 * h);
    EXPECT_LT(err, previous);
    previous = err;
  }
}

TEST(DirichletEnergy, IdenticalSheetsScaleWithQ) {
  auto dom = build_halfdisk(1.0, InterfaceSpec::flat(), 1.0 / 32);
  auto f = [](Point2 p, int) { return p.x * p.y + p.x; };
  // Only the plus side is compared: the Q = 1 map has no minus sheets.
  const QHalfMap u1 = fill(dom, 1, f);
  QHalfMap u3(dom, 3, 1);
  for (std::size_t id = 0; id < dom->size(); ++id) {
    const double v = f(dom->node(id), 0);
    if (plus_only(dom->tag(id))) u3.set_plus(id, QPoint::scalars({v, v, v}));
    if (dom->tag(id) == NodeTag::Interface) u3.set_interface(id, std::vector<double>{v}, std::vector<double>{v, v});
  }
  // Minus sheets stay 0 away from the interface; compare against the plus-only part.
  double plus_part = 0.0;
  std::vector<int> perm(3);
  for (std::size_t a = 0; a < dom->size(); ++a)
    for (int k : {0, 2}) {
      const long b = dom->neighbour(a, k);
      if (b < 0) continue;
      const NodeTag ta = dom->tag(a), tb = dom->tag(static_cast<std::size_t>(b));
      const bool both = ta == NodeTag::Interface && tb == NodeTag::Interface;
      if (both || plus_only(ta) || plus_only(tb))
        plus_part += (both ? 0.5 : 1.0) * detail::match_raw(u3.plus_raw(a), u3.plus_raw(static_cast<std::size_t>(b)), 3, 1,
                                                             perm.data());
    }
  EXPECT_NEAR(plus_part, 3 * dirichlet_energy(u1), 1e-12);
}

TEST(Minimize, ClassicalLimitMatchesLinearSolve) {
  auto dom = build_halfdisk(1.0, InterfaceSpec::flat(), 1.0 / 64);
  auto data = [](Point2 p) { return p.x * p.x - p.y * p.y; };
  SolverConfig cfg;
  cfg.starts = 1;
  const QHalfMap u = minimize(dom, 1, 1, sheets_of(data, 1, data), cfg);
  EXPECT_TRUE(u.info.converged);
  const auto ref = linear_reference(*dom, data);
  double err = 0.0;
  for (std::size_t id = 0; id < dom->size(); ++id)
    if (dom->on_side(id, Side::Plus)) err = std::max(err, std::abs(u.plus_raw(id)[0] - ref[id]));
  EXPECT_LE(err, 1e-8);
  EXPECT_EQ(u.info.descent_violations, 0);
}

TEST(Minimize, CollapsedLinearDataIsReproducedExactly) {
  auto dom = build_halfdisk(1.0, InterfaceSpec::flat(), 1.0 / 32);
  const QHalfMap u = minimize(dom, 3, 1, sheets_of([](Point2 p) { return p.y; }, 3, [](Point2) { return 0.0; }));
  EXPECT_TRUE(u.info.converged);
  double err = 0.0;
  for (std::size_t id = 0; id < dom->size(); ++id) {
    const double y = dom->node(id).y;
    if (dom->on_side(id, Side::Plus))
      for (int i = 0; i < 3; ++i) err = std::max(err, std::abs(u.plus_raw(id)[i] - y));
    if (dom->on_side(id, Side::Minus))
      for (int i = 0; i < 2; ++i) err = std::max(err, std::abs(u.minus_raw(id)[i] - y));
  }
  EXPECT_LE(err, 1e-8);
  EXPECT_TRUE(u.interface_compatible());
  EXPECT_EQ(u.info.start_energies.size(), 3u);
  EXPECT_FALSE(u.info.starts_disagree);
}

TEST(Minimize, ZeroDataGivesZeroMap) {
  auto dom = build_halfdisk(1.0, InterfaceSpec::sine(0.05, 3.0), 1.0 / 32);
  const QHalfMap u = minimize(dom, 2, 1, sheets_of([](Point2) { return 0.0; }, 2, [](Point2) { return 0.0; }));
  EXPECT_EQ(dirichlet_energy(u), 0.0);
  EXPECT_TRUE(u.info.converged);
}

TEST(Minimize, RejectsWrongBoundaryShape) {
  auto dom = build_halfdisk(1.0, InterfaceSpec::flat(), 1.0 / 16);
  BoundaryData b = sheets_of([](Point2) { return 1.0; }, 2, [](Point2) { return 0.0; });
  EXPECT_THROW(minimize(dom, 3, 1, b), DimensionMismatch);
}

TEST(Minimize, NotConvergedIsFlaggedNotThrown) {
  auto dom = build_halfdisk(1.0, InterfaceSpec::flat(), 1.0 / 32);
  SolverConfig cfg;
  cfg.max_sweeps = 3;
  cfg.starts = 1;
  const QHalfMap u = minimize(dom, 2, 1, sheets_of([](Point2 p) { return p.x + p.y; }, 2, [](Point2) { return 0.0; }), cfg);
  EXPECT_FALSE(u.info.converged);
  EXPECT_EQ(u.info.sweeps, 3);
  EXPECT_THROW(collapse_decompose(u), NotConvergedError);
}

namespace {

// Sheets y + c_i Im(z^3), c_i symmetric about 0.
BoundaryData odd_cubic(int q) {
  auto sheet = [](Point2 p, int i, int count) {
    const double c = count == 1 ? 0.0 : 0.5 * (2.0 * i / (count - 1) - 1.0);
    return p.y + c * (3 * p.x * p.x * p.y - p.y * p.y * p.y);
  };
  BoundaryData b;
  b.plus = [=](Point2 p) {
    std::vector<double> v(static_cast<std::size_t>(q));
    for (int i = 0; i < q; ++i) v[i] = sheet(p, i, q);
    return QPoint(q, 1, v);
  };
  b.minus = [=](Point2 p) {
    std::vector<double> v(static_cast<std::size_t>(q - 1));
    for (int i = 0; i < q - 1; ++i) v[i] = sheet(p, i, q - 1);
    return QPoint(q - 1, 1, v);
  };
  b.phi = [](Point2) { return Vec{0.0}; };
  return b;
}

}  // namespace

TEST(Minimize, EnergyNeverIncreasesAndSpotCheckHolds) {
  auto dom = build_halfdisk(1.0, InterfaceSpec::sine(0.05, 3.0), 1.0 / 32);
  const QHalfMap u = minimize(dom, 3, 1, odd_cubic(3));
  EXPECT_TRUE(u.info.converged);
  EXPECT_EQ(u.info.descent_violations, 0);
  EXPECT_LE(minimality_spot_check(u, 100, 42), 1e-12 * u.info.initial_energy);
}

TEST(Minimize, FreeInterfaceKeepsPhiSheet) {
  auto dom = build_halfdisk(1.0, InterfaceSpec::flat(), 1.0 / 32);
  SolverConfig cfg;
  cfg.collapsed = false;
  const QHalfMap u = minimize(dom, 3, 1, odd_cubic(3), cfg);
  EXPECT_TRUE(u.info.converged);
  EXPECT_TRUE(u.interface_compatible());
  EXPECT_EQ(u.info.descent_violations, 0);
  EXPECT_LE(minimality_spot_check(u, 100, 7, 0.1, false), 1e-12 * u.info.initial_energy);
  // Releasing the interface can only lower the minimum.
  const QHalfMap pinned = minimize(dom, 3, 1, odd_cubic(3));
  EXPECT_LE(u.info.energy, pinned.info.energy + 1e-12);
}

TEST(CheckCollapsed, PinnedAndShifted) {
  auto dom = build_halfdisk(1.0, InterfaceSpec::flat(), 1.0 / 16);
  const QHalfMap u = minimize(dom, 3, 1, odd_cubic(3));
  const CollapseCheck c = check_collapsed(u, 1e-12);
  EXPECT_TRUE(c.collapsed);
  EXPECT_EQ(c.spread, 0.0);

  QHalfMap v = u;
  double expected = 0.0;
  for (std::size_t id = 0; id < dom->size(); ++id) {
    if (dom->tag(id) != NodeTag::Interface) continue;
    const double shift = 0.25 + 0.1 * dom->node(id).x;
    v.set_interface(id, v.phi(id), std::vector<double>{shift, shift});
    expected = std::max(expected, std::sqrt(2.0) * std::abs(shift));
  }
  const CollapseCheck d = check_collapsed(v, 1e-6);
  EXPECT_FALSE(d.collapsed);
  EXPECT_NEAR(d.spread, expected, 1e-14);
  EXPECT_TRUE(v.interface_compatible());
}

TEST(CollapseDecompose, LinearExampleIsExact) {
  auto dom = build_halfdisk(1.0, InterfaceSpec::flat(), 1.0 / 32);
  const QHalfMap u = minimize(dom, 3, 1, sheets_of([](Point2 p) { return p.y; }, 3, [](Point2) { return 0.0; }));
  const CollapseDecomposition d = collapse_decompose(u);
  EXPECT_LE(d.sheet_spread, 1e-8);
  EXPECT_LE(d.harmonic_defect, 1e-8);
  EXPECT_LE(d.odd_defect, 1e-8);
}

TEST(CollapseDecompose, OddQuadraticConvergesToClosedForm) {
  std::vector<double> errors;
  for (double h : {1.0 / 16, 1.0 / 32, 1.0 / 64}) {
    auto dom = build_halfdisk(1.0, InterfaceSpec::flat(), h);
    auto f = [](Point2 p) { return 2 * p.x * p.y; };
    const QHalfMap u = minimize(dom, 3, 1, sheets_of(f, 3, [](Point2) { return 0.0; }));
    const CollapseDecomposition d = collapse_decompose(u);
    double err = 0.0;
    for (std::size_t id = 0; id < dom->size(); ++id) err = std::max(err, std::abs(d.h[id] - f(dom->node(id))));
    errors.push_back(err);
    EXPECT_LE(d.sheet_spread, 1e-8);
    EXPECT_LE(d.odd_defect, 1e-8);
  }
  // 2xy is discrete-harmonic, so the only error is the solver tolerance.
  for (double e : errors) EXPECT_LE(e, 1e-8);
}

TEST(CollapseDecompose, ZeroMeanDataStaysZeroMean) {
  auto dom = build_halfdisk(1.0, InterfaceSpec::flat(), 1.0 / 32);
  BoundaryData b;
  b.plus = [](Point2 p) { return QPoint::scalars({p.y, -0.5 * p.y + 0.3 * p.x * p.y, -0.5 * p.y - 0.3 * p.x * p.y}); };
  b.minus = [](Point2 p) { return QPoint::scalars({p.x * p.y, -p.x * p.y}); };
  b.phi = [](Point2) { return Vec{0.0}; };
  const QHalfMap u = minimize(dom, 3, 1, b);
  const CollapseDecomposition d = collapse_decompose(u);
  for (double v : d.h) EXPECT_LE(std::abs(v), 1e-8);
}

TEST(InterpolateAnnulus, IdenticalMapsAreUnchanged) {
  auto dom = build_halfdisk(1.0, InterfaceSpec::flat(), 1.0 / 32);
  const QHalfMap f = minimize(dom, 3, 1, odd_cubic(3));
  const Interpolation r = interpolate_annulus(f, f, 0.2);
  EXPECT_NEAR(r.report.band_energy, r.report.energy_f, 1e-12);
  EXPECT_EQ(r.report.distance_sq, 0.0);
  EXPECT_TRUE(r.map.interface_compatible());
  EXPECT_THROW(interpolate_annulus(f, f, 1.0 / 32), ResolutionError);
}

TEST(InterpolateAnnulus, ConstantsFollowInverseSquareScaling) {
  const double h = 1.0 / 128, lambda = 0.2;
  auto dom = build_halfdisk(1.0, InterfaceSpec::flat(), h);
  // f = 2[[1]] / [[1]] and g = [[-1]] + [[1]] / [[-1]]: the second plus sheet
  // is common to both (it carries phi = 1 on the interface).
  const QHalfMap f = fill(dom, 2, [](Point2, int) { return 1.0; });
  const QHalfMap g = fill(dom, 2, [](Point2, int i) { return i == 1 ? 1.0 : -1.0; });
  const Interpolation r = interpolate_annulus(f, g, lambda);
  EXPECT_TRUE(r.map.interface_compatible());
  // One sheet moves from -1 to 1 on each side: |Dz|^2 = (2 / lambda)^2 over the band.
  const double area = std::numbers::pi * (1 - (1 - lambda) * (1 - lambda));
  const double expected = area * 4.0 / (lambda * lambda);
  EXPECT_NEAR(r.report.band_energy / expected, 1.0, 0.05);
}
