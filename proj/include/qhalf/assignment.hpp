#pragma once

// Square linear assignment: Kuhn-Munkres with potentials, O(n^3), plus a
// lexicographic tie-breaking pass so that equal-cost optimal permutations are
// resolved deterministically.

#include <algorithm>
#include <array>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

namespace qhalf::assignment {

/// Row-major n x n cost matrix view.
struct CostView {
  std::span<const double> data;
  std::size_t n = 0;
  double operator()(std::size_t i, std::size_t j) const { return data[i * n + j]; }
};

inline double permutation_cost(CostView c, std::span<const int> perm) {
  double s = 0.0;
  for (std::size_t i = 0; i < c.n; ++i) s += c(i, static_cast<std::size_t>(perm[i]));
  return s;
}

/// Minimum-cost assignment. `perm[i]` is the column assigned to row i.
/// Returns the cost recomputed as a plain sum over the chosen entries.
inline double hungarian(CostView c, std::vector<int>& perm) {
  const std::size_t n = c.n;
  perm.assign(n, -1);
  if (n == 0) return 0.0;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      std::size_t j1 = 0;
      double delta = inf;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = c(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  for (std::size_t j = 1; j <= n; ++j) perm[p[j] - 1] = static_cast<int>(j - 1);
  return permutation_cost(c, perm);
}

/// Relative slack under which two permutation costs count as tied.
inline double tie_tolerance(double best) { return 1e-12 * (1.0 + best); }

namespace detail {

// Small sizes: enumerate all permutations in lexicographic order. Allocation
// free; n <= 4.
inline double enumerate_lexmin_raw(const double* c, int n, int* perm) {
  std::array<int, 4> cur{};
  std::array<double, 24> costs_small;
  std::iota(cur.begin(), cur.begin() + n, 0);
  double best = std::numeric_limits<double>::infinity();
  int count = 0;
  do {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += c[i * n + cur[i]];
    costs_small[count++] = s;
    best = std::min(best, s);
  } while (std::next_permutation(cur.begin(), cur.begin() + n));
  const double tol = tie_tolerance(best);
  std::iota(cur.begin(), cur.begin() + n, 0);
  int k = 0;
  do {
    if (costs_small[k++] <= best + tol) {
      std::copy(cur.begin(), cur.begin() + n, perm);
      return best;
    }
  } while (std::next_permutation(cur.begin(), cur.begin() + n));
  return best;
}

inline double enumerate_lexmin(CostView c, std::vector<int>& perm) {
  perm.assign(c.n, 0);
  if (c.n == 0) return 0.0;
  return enumerate_lexmin_raw(c.data.data(), static_cast<int>(c.n), perm.data());
}

}  // namespace detail

/// Optimal assignment whose permutation is the lexicographically smallest
/// among all permutations within tie_tolerance of the optimum. Returns the
/// optimal cost (not the cost of the tie-broken permutation, which can differ
/// from it by at most the tolerance).
inline double lexmin_assignment(CostView c, std::vector<int>& perm) {
  const std::size_t n = c.n;
  if (n <= 4) return detail::enumerate_lexmin(c, perm);

  std::vector<int> opt;
  const double best = hungarian(c, opt);
  const double tol = tie_tolerance(best);

  perm.assign(n, -1);
  std::vector<char> col_used(n, 0);
  double fixed = 0.0;
  std::vector<double> sub;
  std::vector<int> sub_perm;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t rest = n - i - 1;
    bool placed = false;
    for (std::size_t j = 0; j < n && !placed; ++j) {
      if (col_used[j]) continue;
      // Remaining rows i+1.. against remaining columns other than j.
      std::vector<std::size_t> cols;
      cols.reserve(rest);
      for (std::size_t k = 0; k < n; ++k)
        if (!col_used[k] && k != j) cols.push_back(k);
      sub.assign(rest * rest, 0.0);
      for (std::size_t a = 0; a < rest; ++a)
        for (std::size_t b = 0; b < rest; ++b) sub[a * rest + b] = c(i + 1 + a, cols[b]);
      const double tail = hungarian(CostView{sub, rest}, sub_perm);
      if (fixed + c(i, j) + tail <= best + tol) {
        perm[i] = static_cast<int>(j);
        col_used[j] = 1;
        fixed += c(i, j);
        placed = true;
      }
    }
    if (!placed) {
      // Rounding pushed every branch over the slack; fall back to the solver's answer.
      perm = opt;
      return best;
    }
  }
  return best;
}

}  // namespace qhalf::assignment
