#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "qhalf/assignment.hpp"
#include "qhalf/qpoint.hpp"

using namespace qhalf;

namespace {

QPoint random_qpoint(std::mt19937_64& rng, int q, int n, double spread = 1.0) {
  std::normal_distribution<double> g(0.0, spread);
  std::vector<double> v(static_cast<std::size_t>(q * n));
  for (double& x : v) x = g(rng);
  return QPoint(q, n, v);
}

QPoint shuffled(const QPoint& a, std::mt19937_64& rng) {
  std::vector<int> perm(static_cast<std::size_t>(a.multiplicity()));
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  return permuted(a, perm);
}

// Exhaustive minimum, written independently of the library's brute force.
double enumerate_min(const QPoint& a, const QPoint& b) {
  std::vector<int> p(static_cast<std::size_t>(a.multiplicity()));
  std::iota(p.begin(), p.end(), 0);
  double best = 1e300;
  do {
    double s = 0;
    for (int i = 0; i < a.multiplicity(); ++i)
      for (int k = 0; k < a.dim(); ++k) s += std::pow(a.sheet(i)[k] - b.sheet(p[i])[k], 2);
    best = std::min(best, s);
  } while (std::next_permutation(p.begin(), p.end()));
  return std::sqrt(best);
}

}  // namespace

TEST(QPoint, RejectsBadShapes) {
  EXPECT_THROW(QPoint(0, 1), DomainError);
  EXPECT_THROW(QPoint(1, 0), DomainError);
  EXPECT_THROW(QPoint(2, 2, {1.0, 2.0, 3.0}), DimensionMismatch);
}

TEST(GDistance, SmallCases) {
  const auto a = QPoint::from_sheets({{0, 0}, {1, 0}});
  EXPECT_EQ(g_distance(a, a), 0.0);
  EXPECT_DOUBLE_EQ(g_distance(QPoint::scalars({0, 0}), QPoint::scalars({0, 5})), 5.0);
  EXPECT_THROW(g_distance(QPoint::scalars({0, 0}), QPoint::scalars({0, 0, 1})), DimensionMismatch);
  EXPECT_THROW(g_distance(QPoint(2, 1), QPoint(2, 2)), DimensionMismatch);
}

TEST(GDistance, BruteForceSmallCases) {
  EXPECT_DOUBLE_EQ(g_distance_bruteforce(QPoint::from_sheets({{3, 4}}), QPoint::from_sheets({{0, 0}})), 5.0);
  EXPECT_EQ(g_distance_bruteforce(QPoint::scalars({0, 1}), QPoint::scalars({1, 0})), 0.0);
  EXPECT_NEAR(g_distance_bruteforce(QPoint::scalars({0, 1}), QPoint::scalars({0.1, 0.9})), std::sqrt(0.02), 1e-15);
  EXPECT_THROW(g_distance_bruteforce(QPoint(9, 1), QPoint(9, 1)), SizeLimitError);
}

TEST(GDistance, MatchesEnumerationOnRandomPairs) {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 1000; ++t) {
    const int q = 1 + static_cast<int>(rng() % 6), n = 1 + static_cast<int>(rng() % 4);
    const QPoint a = random_qpoint(rng, q, n), b = random_qpoint(rng, q, n);
    const double oracle = enumerate_min(a, b);
    EXPECT_NEAR(g_distance(a, b), oracle, 1e-12);
    EXPECT_NEAR(g_distance_bruteforce(a, b), oracle, 1e-12);
    EXPECT_NEAR(std::sqrt(optimal_matching(a, b).cost), oracle, 1e-12);
  }
}

TEST(GDistance, MetricAxioms) {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 1000; ++t) {
    const int q = 1 + static_cast<int>(rng() % 6), n = 1 + static_cast<int>(rng() % 4);
    const QPoint a = random_qpoint(rng, q, n), b = random_qpoint(rng, q, n), c = random_qpoint(rng, q, n);
    EXPECT_EQ(g_distance(a, b), g_distance(b, a));
    EXPECT_LE(g_distance(a, c), g_distance(a, b) + g_distance(b, c) + 1e-10);
    EXPECT_EQ(g_distance(a, shuffled(a, rng)), 0.0);
    EXPECT_GT(g_distance(a, b), 0.0);
  }
}

TEST(GDistance, PermutationInvariance) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 200; ++t) {
    const int q = 1 + static_cast<int>(rng() % 6), n = 1 + static_cast<int>(rng() % 3);
    const QPoint a = random_qpoint(rng, q, n), b = random_qpoint(rng, q, n);
    const QPoint a2 = shuffled(a, rng), b2 = shuffled(b, rng);
    EXPECT_EQ(g_distance(a, b), g_distance(a2, b2));
    EXPECT_EQ(optimal_matching(a, b).cost, optimal_matching(a2, b2).cost);
    const Vec m1 = eta_mean(a), m2 = eta_mean(a2);
    for (int k = 0; k < n; ++k) EXPECT_NEAR(m1[k], m2[k], 1e-15);
    EXPECT_TRUE(same_multiset(blend(a, b, 0.3), blend(a2, b2, 0.3)) ||
                g_distance(blend(a, b, 0.3), blend(a2, b2, 0.3)) < 1e-12);
  }
}

TEST(GDistance, MeanContraction) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 500; ++t) {
    const int q = 1 + static_cast<int>(rng() % 6), n = 1 + static_cast<int>(rng() % 4);
    const QPoint a = random_qpoint(rng, q, n), b = random_qpoint(rng, q, n);
    const Vec ea = eta_mean(a), eb = eta_mean(b);
    double d = 0;
    for (int k = 0; k < n; ++k) d += (ea[k] - eb[k]) * (ea[k] - eb[k]);
    EXPECT_LE(std::sqrt(q * d), g_distance(a, b) + 1e-12);
  }
}

TEST(OptimalMatching, Basics) {
  const auto a = QPoint::scalars({0, 2});
  const Matching id = optimal_matching(a, a);
  EXPECT_EQ(id.permutation, (std::vector<int>{0, 1}));
  EXPECT_EQ(id.cost, 0.0);
  const Matching sw = optimal_matching(a, QPoint::scalars({2, 0}));
  EXPECT_EQ(sw.permutation, (std::vector<int>{1, 0}));
  EXPECT_EQ(sw.cost, 0.0);
}

TEST(OptimalMatching, TiesGoToLexicographicallySmallest) {
  // All permutations cost the same.
  const auto a = QPoint::scalars({1, 1, 1, 1, 1, 1});
  const auto b = QPoint::scalars({0, 0, 0, 0, 0, 0});
  EXPECT_EQ(optimal_matching(a, b).permutation, (std::vector<int>{0, 1, 2, 3, 4, 5}));
  // Two sheets of b equidistant from everything in a.
  const auto c = QPoint::from_sheets({{0, 1}, {0, -1}, {5, 0}, {9, 0}, {20, 0}});
  const auto d = QPoint::from_sheets({{1, 0}, {-1, 0}, {5, 0}, {9, 0}, {20, 0}});
  EXPECT_EQ(optimal_matching(c, d).permutation, (std::vector<int>{0, 1, 2, 3, 4}));
}

TEST(OptimalMatching, CostIsSumOverPermutation) {
  std::mt19937_64 rng(13);
  for (int t = 0; t < 200; ++t) {
    const int q = 1 + static_cast<int>(rng() % 7), n = 1 + static_cast<int>(rng() % 3);
    const QPoint a = random_qpoint(rng, q, n), b = random_qpoint(rng, q, n);
    const Matching m = optimal_matching(a, b);
    std::vector<int> sorted = m.permutation;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < q; ++i) EXPECT_EQ(sorted[i], i);
    double s = 0;
    for (int i = 0; i < q; ++i)
      for (int k = 0; k < n; ++k) s += std::pow(a.sheet(i)[k] - b.sheet(m.permutation[i])[k], 2);
    EXPECT_NEAR(s, m.cost, 1e-12 * (1 + s));
  }
}

TEST(Assignment, LexminAgreesWithEnumerationAboveFour) {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> small(0, 3);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 5 + rng() % 2;
    std::vector<double> c(n * n);
    for (double& x : c) x = small(rng);  // many ties
    std::vector<int> lex;
    assignment::lexmin_assignment({c, n}, lex);
    std::vector<int> p(n);
    std::iota(p.begin(), p.end(), 0);
    double best = 1e300;
    std::vector<int> first;
    do {
      const double s = assignment::permutation_cost({c, n}, p);
      if (s < best - 1e-9) {
        best = s;
        first = p;
      }
    } while (std::next_permutation(p.begin(), p.end()));
    EXPECT_EQ(lex, first);
  }
}

TEST(EtaMean, Examples) {
  EXPECT_EQ(eta_mean(QPoint::from_sheets({{1, 0}, {-1, 0}})), (Vec{0, 0}));
  const Vec p{0.5, -2.0};
  EXPECT_EQ(eta_mean(QPoint::repeated(4, p)), p);
  EXPECT_EQ(eta_mean(QPoint::scalars({0, 1, 2})), (Vec{1}));
}

TEST(Blend, EndpointsAndMidpoint) {
  std::mt19937_64 rng(19);
  const QPoint a = random_qpoint(rng, 4, 2), b = random_qpoint(rng, 4, 2);
  EXPECT_TRUE(same_multiset(blend(a, b, 0.0), a));
  EXPECT_LT(g_distance(blend(a, b, 1.0), b), 1e-15);
  EXPECT_TRUE(same_multiset(blend(QPoint::scalars({0, 0}), QPoint::scalars({2, 4}), 0.5), QPoint::scalars({1, 2})));
  EXPECT_THROW(blend(a, b, 1.5), DomainError);
  EXPECT_THROW(blend(a, b, -0.1), DomainError);
}

TEST(Blend, PathLengthIsLinear) {
  std::mt19937_64 rng(23);
  for (int t = 0; t < 300; ++t) {
    const int q = 1 + static_cast<int>(rng() % 6), n = 1 + static_cast<int>(rng() % 4);
    const QPoint a = random_qpoint(rng, q, n), b = random_qpoint(rng, q, n);
    const double tt = std::uniform_real_distribution<double>(0, 1)(rng);
    EXPECT_NEAR(g_distance(a, blend(a, b, tt)), tt * g_distance(a, b), 1e-10);
  }
}
