#pragma once

// Unordered Q-tuples of points in R^n (the space A_Q(R^n)) and the
// optimal-matching metric G on them.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "qhalf/assignment.hpp"
#include "qhalf/errors.hpp"

namespace qhalf {

using Vec = std::vector<double>;

/// Q sheets of dimension n, stored sheet-major. Storage order carries no
/// meaning; every operation below is invariant under sheet permutations.
class QPoint {
 public:
  QPoint() = default;

  QPoint(int q, int n) : q_(q), n_(n), data_(static_cast<std::size_t>(q) * static_cast<std::size_t>(n), 0.0) {
    validate();
  }

  QPoint(int q, int n, std::vector<double> flat) : q_(q), n_(n), data_(std::move(flat)) {
    validate();
    if (data_.size() != static_cast<std::size_t>(q_) * static_cast<std::size_t>(n_))
      throw DimensionMismatch("QPoint: flat storage has " + std::to_string(data_.size()) + " entries, expected Q*n = " +
                              std::to_string(q_ * n_));
  }

  /// Sheets given as a list of vectors of equal length.
  static QPoint from_sheets(const std::vector<Vec>& sheets) {
    if (sheets.empty()) throw DomainError("QPoint: need at least one sheet");
    const int n = static_cast<int>(sheets.front().size());
    std::vector<double> flat;
    flat.reserve(sheets.size() * sheets.front().size());
    for (const auto& s : sheets) {
      if (static_cast<int>(s.size()) != n) throw DimensionMismatch("QPoint: sheets of different dimension");
      flat.insert(flat.end(), s.begin(), s.end());
    }
    return QPoint(static_cast<int>(sheets.size()), n, std::move(flat));
  }

  /// Scalar sheets (n = 1).
  static QPoint scalars(std::initializer_list<double> values) {
    return QPoint(static_cast<int>(values.size()), 1, std::vector<double>(values));
  }

  /// Q copies of p, written Q[[p]].
  static QPoint repeated(int q, std::span<const double> p) {
    QPoint out(q, static_cast<int>(p.size()));
    for (int i = 0; i < q; ++i) std::copy(p.begin(), p.end(), out.sheet_mut(i).begin());
    return out;
  }

  int multiplicity() const { return q_; }
  int dim() const { return n_; }

  std::span<const double> sheet(int i) const {
    return {data_.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(n_), static_cast<std::size_t>(n_)};
  }
  std::span<double> sheet_mut(int i) {
    return {data_.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(n_), static_cast<std::size_t>(n_)};
  }
  std::span<const double> flat() const { return data_; }
  std::span<double> flat_mut() { return data_; }

  /// Sum of squared norms of all sheets, |P|^2.
  double norm2() const {
    double s = 0.0;
    for (double v : data_) s += v * v;
    return s;
  }

 private:
  void validate() const {
    if (q_ < 1) throw DomainError("QPoint: multiplicity Q must be >= 1");
    if (n_ < 1) throw DomainError("QPoint: ambient dimension n must be >= 1");
  }

  int q_ = 1;
  int n_ = 1;
  std::vector<double> data_ = std::vector<double>(1, 0.0);
};

/// A minimizing permutation for G(a, b): sheet i of a is paired with sheet
/// permutation[i] of b, and cost = sum_i |a_i - b_{perm(i)}|^2.
struct Matching {
  std::vector<int> permutation;
  double cost = 0.0;
};

namespace detail {

inline void check_compatible(const QPoint& a, const QPoint& b) {
  if (a.multiplicity() != b.multiplicity() || a.dim() != b.dim())
    throw DimensionMismatch("QPoint: mismatched (Q, n): (" + std::to_string(a.multiplicity()) + ", " +
                            std::to_string(a.dim()) + ") vs (" + std::to_string(b.multiplicity()) + ", " +
                            std::to_string(b.dim()) + ")");
}

inline double sq_dist(const double* x, const double* y, int n) {
  double s = 0.0;
  for (int k = 0; k < n; ++k) {
    const double d = x[k] - y[k];
    s += d * d;
  }
  return s;
}

/// Squared-distance matrix between the sheets of two flat Q x n blocks.
inline void cost_matrix(const double* a, const double* b, int q, int n, double* out) {
  for (int i = 0; i < q; ++i)
    for (int j = 0; j < q; ++j) out[i * q + j] = sq_dist(a + i * n, b + j * n, n);
}

/// Optimal matching on raw storage; the hot path of the sweep solver.
/// `perm` must hold q entries. Returns the minimal cost.
inline double match_raw(const double* a, const double* b, int q, int n, int* perm) {
  if (q == 1) {
    perm[0] = 0;
    return sq_dist(a, b, n);
  }
  if (q == 2) {
    const double straight = sq_dist(a, b, n) + sq_dist(a + n, b + n, n);
    const double crossed = sq_dist(a, b + n, n) + sq_dist(a + n, b, n);
    const double best = std::min(straight, crossed);
    if (straight <= best + assignment::tie_tolerance(best)) {
      perm[0] = 0;
      perm[1] = 1;
    } else {
      perm[0] = 1;
      perm[1] = 0;
    }
    return best;
  }
  double cost[64];
  std::vector<double> big;
  double* c = cost;
  if (q * q > 64) {
    big.resize(static_cast<std::size_t>(q * q));
    c = big.data();
  }
  cost_matrix(a, b, q, n, c);
  if (q <= 4) return assignment::detail::enumerate_lexmin_raw(c, q, perm);
  std::vector<int> p;
  const double best =
      assignment::lexmin_assignment({std::span<const double>(c, static_cast<std::size_t>(q * q)), static_cast<std::size_t>(q)}, p);
  std::copy(p.begin(), p.end(), perm);
  return best;
}

// Sum of the paired squared distances taken in sorted order, so the value
// does not depend on argument order or sheet storage order.
inline double canonical_cost(const double* a, const double* b, int q, int n, const int* perm) {
  std::vector<double> terms(static_cast<std::size_t>(q));
  for (int i = 0; i < q; ++i) terms[i] = sq_dist(a + i * n, b + perm[i] * n, n);
  std::sort(terms.begin(), terms.end());
  double s = 0.0;
  for (double t : terms) s += t;
  return s;
}

}  // namespace detail

/// Cost-minimizing pairing of sheets; ties go to the lexicographically
/// smallest permutation.
inline Matching optimal_matching(const QPoint& a, const QPoint& b) {
  detail::check_compatible(a, b);
  Matching m;
  m.permutation.resize(static_cast<std::size_t>(a.multiplicity()));
  detail::match_raw(a.flat().data(), b.flat().data(), a.multiplicity(), a.dim(), m.permutation.data());
  m.cost = detail::canonical_cost(a.flat().data(), b.flat().data(), a.multiplicity(), a.dim(), m.permutation.data());
  return m;
}

/// G(a, b) = sqrt(min_sigma sum_i |a_i - b_sigma(i)|^2).
inline double g_distance(const QPoint& a, const QPoint& b) {
  detail::check_compatible(a, b);
  const int q = a.multiplicity();
  std::vector<double> c(static_cast<std::size_t>(q * q));
  detail::cost_matrix(a.flat().data(), b.flat().data(), q, a.dim(), c.data());
  std::vector<int> perm;
  assignment::hungarian({c, static_cast<std::size_t>(q)}, perm);
  return std::sqrt(detail::canonical_cost(a.flat().data(), b.flat().data(), q, a.dim(), perm.data()));
}

inline constexpr int kBruteForceMaxQ = 8;

/// Reference G by exhaustive search over all Q! permutations.
inline double g_distance_bruteforce(const QPoint& a, const QPoint& b) {
  detail::check_compatible(a, b);
  const int q = a.multiplicity();
  if (q > kBruteForceMaxQ)
    throw SizeLimitError("g_distance_bruteforce: Q = " + std::to_string(q) + " exceeds " +
                         std::to_string(kBruteForceMaxQ));
  std::vector<int> perm(static_cast<std::size_t>(q));
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double s = 0.0;
    for (int i = 0; i < q; ++i) s += detail::sq_dist(a.sheet(i).data(), b.sheet(perm[i]).data(), a.dim());
    best = std::min(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return std::sqrt(best);
}

/// Arithmetic mean of the sheets (eta).
inline Vec eta_mean(const QPoint& a) {
  Vec m(static_cast<std::size_t>(a.dim()), 0.0);
  for (int i = 0; i < a.multiplicity(); ++i)
    for (int k = 0; k < a.dim(); ++k) m[k] += a.sheet(i)[k];
  for (double& v : m) v /= a.multiplicity();
  return m;
}

/// Straight matched segment from a (t = 0) to b (t = 1).
inline QPoint blend(const QPoint& a, const QPoint& b, double t) {
  detail::check_compatible(a, b);
  if (!(t >= 0.0 && t <= 1.0)) throw DomainError("blend: t must lie in [0, 1]");
  const Matching m = optimal_matching(a, b);
  QPoint out(a.multiplicity(), a.dim());
  for (int i = 0; i < a.multiplicity(); ++i) {
    auto ai = a.sheet(i);
    auto bi = b.sheet(m.permutation[i]);
    auto oi = out.sheet_mut(i);
    for (int k = 0; k < a.dim(); ++k) oi[k] = (1.0 - t) * ai[k] + t * bi[k];
  }
  return out;
}

/// Sheets reordered: out.sheet(i) = a.sheet(perm[i]).
inline QPoint permuted(const QPoint& a, std::span<const int> perm) {
  QPoint out(a.multiplicity(), a.dim());
  for (int i = 0; i < a.multiplicity(); ++i) {
    auto src = a.sheet(perm[i]);
    std::copy(src.begin(), src.end(), out.sheet_mut(i).begin());
  }
  return out;
}

/// Exact multiset equality (sheets compared bitwise after sorting).
inline bool same_multiset(const QPoint& a, const QPoint& b) {
  if (a.multiplicity() != b.multiplicity() || a.dim() != b.dim()) return false;
  auto sorted = [](const QPoint& p) {
    std::vector<Vec> s;
    for (int i = 0; i < p.multiplicity(); ++i) s.emplace_back(p.sheet(i).begin(), p.sheet(i).end());
    std::sort(s.begin(), s.end());
    return s;
  };
  return sorted(a) == sorted(b);
}

}  // namespace qhalf
