#pragma once

// Single-valued 5-point Laplace problem on the plus side, assembled and
// solved as one sparse system. Used as the classical-limit oracle.

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <functional>
#include <vector>

#include "qhalf/errors.hpp"
#include "qhalf/halfdomain.hpp"

namespace qhalf {

/// Values on every node: interior plus nodes solved, all others given by data.
inline std::vector<double> linear_reference(const HalfDomain& dom, const std::function<double(Point2)>& data) {
  std::vector<long> index(dom.size(), -1);
  long unknowns = 0;
  for (std::size_t id = 0; id < dom.size(); ++id)
    if (dom.tag(id) == NodeTag::InteriorPlus) index[id] = unknowns++;
  std::vector<Eigen::Triplet<double>> trip;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(unknowns);
  for (std::size_t id = 0; id < dom.size(); ++id) {
    if (index[id] < 0) continue;
    trip.emplace_back(index[id], index[id], 4.0);
    for (int k = 0; k < 4; ++k) {
      const auto b = static_cast<std::size_t>(dom.neighbour(id, k));
      if (index[b] >= 0)
        trip.emplace_back(index[id], index[b], -1.0);
      else
        rhs[index[id]] += data(dom.node(b));
    }
  }
  Eigen::SparseMatrix<double> a(unknowns, unknowns);
  a.setFromTriplets(trip.begin(), trip.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(a);
  if (lu.info() != Eigen::Success) throw NotConvergedError("linear_reference: factorization failed");
  const Eigen::VectorXd x = lu.solve(rhs);
  std::vector<double> out(dom.size(), 0.0);
  for (std::size_t id = 0; id < dom.size(); ++id) out[id] = index[id] >= 0 ? x[index[id]] : data(dom.node(id));
  return out;
}

}  // namespace qhalf
