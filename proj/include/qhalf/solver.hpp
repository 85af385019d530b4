#pragma once

// (Q-1/2)-valued maps on a HalfDomain: storage, the discrete Dirichlet
// energy, and the matched-mean sweep minimizer.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "qhalf/errors.hpp"
#include "qhalf/halfdomain.hpp"
#include "qhalf/qpoint.hpp"

namespace qhalf {

using PointFn = std::function<Vec(Point2)>;
using QPointFn = std::function<QPoint(Point2)>;

/// Outer boundary data and interface sheet. `minus` is ignored for Q = 1.
struct BoundaryData {
  QPointFn plus;
  QPointFn minus;
  PointFn phi;
};

struct SolveInfo {
  bool converged = true;
  int sweeps = 0;
  double initial_energy = 0.0;
  double energy = 0.0;
  double last_decrease = 0.0;
  double last_update = 0.0;
  int descent_violations = 0;
  double worst_ascent = 0.0;
  std::vector<double> start_energies;
  std::vector<int> start_sweeps;
  int best_start = 0;
  bool starts_disagree = false;
};

/// f+ (Q sheets) on Omega+ and the interface, f- (Q-1 sheets) on Omega- and
/// the interface, phi on the interface. At interface nodes f+ is stored as
/// the Q-1 sheets of f- followed by phi, so f+ = f- + [[phi]] holds exactly.
class QHalfMap {
 public:
  QHalfMap() = default;
  QHalfMap(std::shared_ptr<const HalfDomain> dom, int q, int n) : dom_(std::move(dom)), q_(q), n_(n) {
    if (!dom_) throw DomainError("QHalfMap: null domain");
    if (q < 1) throw DomainError("QHalfMap: Q must be >= 1");
    if (n < 1) throw DomainError("QHalfMap: n must be >= 1");
    const std::size_t nodes = dom_->size();
    plus_.assign(nodes * static_cast<std::size_t>(q * n), 0.0);
    minus_.assign(nodes * static_cast<std::size_t>((q - 1) * n), 0.0);
    phi_.assign(nodes * static_cast<std::size_t>(n), 0.0);
  }

  const HalfDomain& domain() const { return *dom_; }
  const std::shared_ptr<const HalfDomain>& domain_ptr() const { return dom_; }
  int multiplicity() const { return q_; }
  int dim() const { return n_; }
  std::size_t size() const { return dom_->size(); }

  const double* plus_raw(std::size_t id) const { return plus_.data() + id * static_cast<std::size_t>(q_ * n_); }
  double* plus_raw(std::size_t id) { return plus_.data() + id * static_cast<std::size_t>(q_ * n_); }
  const double* minus_raw(std::size_t id) const { return minus_.data() + id * static_cast<std::size_t>((q_ - 1) * n_); }
  double* minus_raw(std::size_t id) { return minus_.data() + id * static_cast<std::size_t>((q_ - 1) * n_); }
  const double* phi_raw(std::size_t id) const { return phi_.data() + id * static_cast<std::size_t>(n_); }

  QPoint plus(std::size_t id) const {
    const double* p = plus_raw(id);
    return QPoint(q_, n_, std::vector<double>(p, p + q_ * n_));
  }
  QPoint minus(std::size_t id) const {
    if (q_ == 1) throw DomainError("QHalfMap: f- has no sheets when Q = 1");
    const double* p = minus_raw(id);
    return QPoint(q_ - 1, n_, std::vector<double>(p, p + (q_ - 1) * n_));
  }
  Vec phi(std::size_t id) const { return Vec(phi_raw(id), phi_raw(id) + n_); }

  /// Values on a non-interface node of Omega+.
  void set_plus(std::size_t id, const QPoint& v) {
    check_shape(v, q_);
    if (dom_->tag(id) == NodeTag::Interface) throw DomainError("QHalfMap: use set_interface on interface nodes");
    std::copy(v.flat().begin(), v.flat().end(), plus_raw(id));
  }
  void set_minus(std::size_t id, const QPoint& v) {
    check_shape(v, q_ - 1);
    if (dom_->tag(id) == NodeTag::Interface) throw DomainError("QHalfMap: use set_interface on interface nodes");
    std::copy(v.flat().begin(), v.flat().end(), minus_raw(id));
  }
  /// Sets phi and the Q-1 minus sheets (flat, (Q-1)*n entries); f+ follows.
  void set_interface(std::size_t id, std::span<const double> phi, std::span<const double> minus_flat) {
    if (phi.size() != static_cast<std::size_t>(n_) || minus_flat.size() != static_cast<std::size_t>((q_ - 1) * n_))
      throw DimensionMismatch("QHalfMap: interface values have the wrong size");
    std::copy(phi.begin(), phi.end(), phi_.begin() + static_cast<std::ptrdiff_t>(id * n_));
    std::copy(minus_flat.begin(), minus_flat.end(), minus_raw(id));
    sync_interface(id);
  }
  /// Re-derives f+ = f- + [[phi]] at an interface node after writing f- in place.
  void sync_interface(std::size_t id) {
    double* p = plus_raw(id);
    std::copy(minus_raw(id), minus_raw(id) + (q_ - 1) * n_, p);
    std::copy(phi_raw(id), phi_raw(id) + n_, p + (q_ - 1) * n_);
  }

  /// Bitwise multiset check f+ = f- + [[phi]] at every interface node.
  bool interface_compatible() const {
    for (std::size_t id = 0; id < size(); ++id) {
      if (dom_->tag(id) != NodeTag::Interface) continue;
      std::vector<double> joined(minus_raw(id), minus_raw(id) + (q_ - 1) * n_);
      joined.insert(joined.end(), phi_raw(id), phi_raw(id) + n_);
      if (!same_multiset(plus(id), QPoint(q_, n_, std::move(joined)))) return false;
    }
    return true;
  }

  SolveInfo info;

 private:
  void check_shape(const QPoint& v, int q) const {
    if (v.multiplicity() != q || v.dim() != n_)
      throw DimensionMismatch("QHalfMap: expected " + std::to_string(q) + " sheets of dimension " + std::to_string(n_));
  }

  std::shared_ptr<const HalfDomain> dom_;
  int q_ = 1;
  int n_ = 1;
  std::vector<double> plus_, minus_, phi_;
};

inline bool plus_only(NodeTag t) { return t == NodeTag::InteriorPlus || t == NodeTag::OuterPlus; }
inline bool minus_only(NodeTag t) { return t == NodeTag::InteriorMinus || t == NodeTag::OuterMinus; }

namespace detail {

// Energy of the edge (a, b): plus-side G^2 if either end is in Omega+, minus
// side if either end is in Omega-, half of each along interface-interface edges.
inline double edge_energy(const QHalfMap& u, std::size_t a, std::size_t b, std::vector<int>& perm) {
  const HalfDomain& dom = u.domain();
  const int q = u.multiplicity(), n = u.dim();
  const NodeTag ta = dom.tag(a), tb = dom.tag(b);
  const bool both_iface = ta == NodeTag::Interface && tb == NodeTag::Interface;
  double e = 0.0;
  if (both_iface || plus_only(ta) || plus_only(tb)) {
    const double w = both_iface ? 0.5 : 1.0;
    e += w * match_raw(u.plus_raw(a), u.plus_raw(b), q, n, perm.data());
  }
  if ((both_iface || minus_only(ta) || minus_only(tb)) && q > 1) {
    const double w = both_iface ? 0.5 : 1.0;
    e += w * match_raw(u.minus_raw(a), u.minus_raw(b), q - 1, n, perm.data());
  }
  return e;
}

}  // namespace detail

/// Sum over grid edges of squared G-distances (the 5-point Dirichlet sum).
inline double dirichlet_energy(const QHalfMap& u) {
  const HalfDomain& dom = u.domain();
  std::vector<int> perm(static_cast<std::size_t>(u.multiplicity()));
  double e = 0.0;
  for (std::size_t a = 0; a < dom.size(); ++a) {
    for (int k : {0, 2}) {
      const long b = dom.neighbour(a, k);
      if (b >= 0) e += detail::edge_energy(u, a, static_cast<std::size_t>(b), perm);
    }
  }
  return e;
}

/// Energy of the edges incident to `id`.
inline double local_energy(const QHalfMap& u, std::size_t id) {
  std::vector<int> perm(static_cast<std::size_t>(u.multiplicity()));
  double e = 0.0;
  for (int k = 0; k < 4; ++k) {
    const long b = u.domain().neighbour(id, k);
    if (b >= 0) e += detail::edge_energy(u, id, static_cast<std::size_t>(b), perm);
  }
  return e;
}

struct SolverConfig {
  int max_sweeps = 20000;
  /// Stop once the per-sweep energy decrease is below eps_stop * E0 ...
  double eps_stop = 1e-12;
  /// ... and no sheet moved by more than this (relative to the data scale).
  double update_tol = 1e-11;
  /// Over-relaxation factor; 0 selects 2 / (1 + sin(pi h / 2R)).
  double omega = 0.0;
  /// Pin the interface to Q[[phi]] / (Q-1)[[phi]].
  bool collapsed = true;
  /// Number of deterministic initializations (1..3).
  int starts = 3;
};

namespace detail {

class Sweeper {
 public:
  Sweeper(QHalfMap& u, const SolverConfig& cfg) : u_(u), cfg_(cfg), dom_(u.domain()) {
    const int q = u.multiplicity();
    for (std::size_t id = 0; id < dom_.size(); ++id) {
      const NodeTag t = dom_.tag(id);
      bool free = false;
      if (t == NodeTag::InteriorPlus) free = true;
      if (t == NodeTag::InteriorMinus) free = q > 1;
      if (t == NodeTag::Interface) free = !cfg.collapsed && q > 1 && !dom_.on_rim(id);
      if (!free) continue;
      const int colour = ((dom_.grid_i(id) + dom_.grid_j(id)) % 2 + 2) % 2;
      colours_[static_cast<std::size_t>(colour)].push_back(id);
    }
    perm_.resize(static_cast<std::size_t>(q));
    target_.resize(static_cast<std::size_t>(q * u.dim()));
    omega_ = cfg.omega > 0.0 ? cfg.omega
                             : 2.0 / (1.0 + std::sin(std::numbers::pi * dom_.spacing() / (2.0 * dom_.radius())));
  }

  bool has_free_nodes() const { return !colours_[0].empty() || !colours_[1].empty(); }

  /// One red-black sweep; returns the largest sheet change.
  double sweep(bool matched, double omega) {
    double change = 0.0;
    for (const auto& nodes : colours_)
      for (std::size_t id : nodes) change = std::max(change, update(id, matched, omega));
    return change;
  }

  double omega() const { return omega_; }

 private:
  // Moves the free sheets at `id` towards the (matched) neighbour mean.
  double update(std::size_t id, bool matched, double omega) {
    const int q = u_.multiplicity(), n = u_.dim();
    const NodeTag t = dom_.tag(id);
    std::fill(target_.begin(), target_.end(), 0.0);
    double wsum = 0.0;
    double* cur = nullptr;
    int sheets = 0;
    auto accumulate = [&](const double* mine, const double* other, int qq, int used, double w) {
      if (matched) {
        match_raw(mine, other, qq, n, perm_.data());
      } else {
        for (int i = 0; i < qq; ++i) perm_[static_cast<std::size_t>(i)] = i;
      }
      for (int i = 0; i < used; ++i)
        for (int c = 0; c < n; ++c) target_[static_cast<std::size_t>(i * n + c)] += w * other[perm_[i] * n + c];
    };
    if (t == NodeTag::InteriorPlus) {
      cur = u_.plus_raw(id);
      sheets = q;
      for (int k = 0; k < 4; ++k) {
        const auto b = static_cast<std::size_t>(dom_.neighbour(id, k));
        accumulate(cur, u_.plus_raw(b), q, q, 1.0);
        wsum += 1.0;
      }
    } else if (t == NodeTag::InteriorMinus) {
      cur = u_.minus_raw(id);
      sheets = q - 1;
      for (int k = 0; k < 4; ++k) {
        const auto b = static_cast<std::size_t>(dom_.neighbour(id, k));
        accumulate(cur, u_.minus_raw(b), q - 1, q - 1, 1.0);
        wsum += 1.0;
      }
    } else {
      // Free interface node: the unknowns are the Q-1 sheets of f-; the phi
      // sheet of f+ takes part in the matching but never moves.
      cur = u_.minus_raw(id);
      sheets = q - 1;
      for (int k = 0; k < 4; ++k) {
        const long nb = dom_.neighbour(id, k);
        if (nb < 0) continue;
        const auto b = static_cast<std::size_t>(nb);
        const bool iface = dom_.tag(b) == NodeTag::Interface;
        const double w = iface ? 0.5 : 1.0;
        if (dom_.on_side(b, Side::Plus)) accumulate(u_.plus_raw(id), u_.plus_raw(b), q, q - 1, w);
        if (dom_.on_side(b, Side::Minus)) accumulate(cur, u_.minus_raw(b), q - 1, q - 1, w);
        wsum += 1.0;
      }
    }
    double change = 0.0;
    for (int i = 0; i < sheets * n; ++i) {
      const double next = cur[i] + omega * (target_[static_cast<std::size_t>(i)] / wsum - cur[i]);
      change = std::max(change, std::abs(next - cur[i]));
      cur[i] = next;
    }
    if (t == NodeTag::Interface) u_.sync_interface(id);
    return change;
  }

  QHalfMap& u_;
  const SolverConfig& cfg_;
  const HalfDomain& dom_;
  std::array<std::vector<std::size_t>, 2> colours_;
  std::vector<int> perm_;
  std::vector<double> target_;
  double omega_ = 1.0;
};

inline double data_scale(const QHalfMap& u) {
  double s = 0.0;
  for (std::size_t id = 0; id < u.size(); ++id) {
    const NodeTag t = u.domain().tag(id);
    if (t == NodeTag::OuterPlus || t == NodeTag::Interface)
      for (int i = 0; i < u.multiplicity() * u.dim(); ++i) s = std::max(s, std::abs(u.plus_raw(id)[i]));
    if (t == NodeTag::OuterMinus)
      for (int i = 0; i < (u.multiplicity() - 1) * u.dim(); ++i) s = std::max(s, std::abs(u.minus_raw(id)[i]));
  }
  return s;
}

// Writes the pinned values (outer nodes, interface) and zeroes the rest.
inline QHalfMap pinned_map(std::shared_ptr<const HalfDomain> dom, int q, int n, const BoundaryData& data,
                           bool collapsed) {
  QHalfMap u(dom, q, n);
  auto check = [&](const QPoint& v, int qq, const char* what) {
    if (v.multiplicity() != qq || v.dim() != n)
      throw DimensionMismatch(std::string("minimize: ") + what + " returned (" + std::to_string(v.multiplicity()) +
                              ", " + std::to_string(v.dim()) + "), expected (" + std::to_string(qq) + ", " +
                              std::to_string(n) + ")");
    return v;
  };
  for (std::size_t id = 0; id < dom->size(); ++id) {
    const Point2 p = dom->node(id);
    switch (dom->tag(id)) {
      case NodeTag::OuterPlus: u.set_plus(id, check(data.plus(p), q, "boundary+")); break;
      case NodeTag::OuterMinus:
        if (q > 1) u.set_minus(id, check(data.minus(p), q - 1, "boundary-"));
        break;
      case NodeTag::Interface: {
        const Vec phi = data.phi(p);
        if (static_cast<int>(phi.size()) != n) throw DimensionMismatch("minimize: phi has the wrong dimension");
        std::vector<double> minus(static_cast<std::size_t>((q - 1) * n));
        if (q > 1 && !collapsed && dom->on_rim(id)) {
          const QPoint m = check(data.minus(p), q - 1, "boundary-");
          std::copy(m.flat().begin(), m.flat().end(), minus.begin());
        } else {
          for (int i = 0; i < q - 1; ++i) std::copy(phi.begin(), phi.end(), minus.begin() + i * n);
        }
        u.set_interface(id, phi, minus);
        break;
      }
      default: break;
    }
  }
  return u;
}

// Matched-mean descent from the current state of u.
inline void descend(QHalfMap& u, const SolverConfig& cfg) {
  Sweeper sw(u, cfg);
  SolveInfo& info = u.info;
  info = SolveInfo{};
  info.initial_energy = dirichlet_energy(u);
  info.energy = info.initial_energy;
  if (!sw.has_free_nodes()) return;
  const double tol_e = cfg.eps_stop * std::max(info.initial_energy, std::numeric_limits<double>::min());
  const double tol_u = cfg.update_tol * (1.0 + data_scale(u));
  info.converged = false;
  double e = info.initial_energy;
  for (int s = 1; s <= cfg.max_sweeps; ++s) {
    const double change = sw.sweep(true, sw.omega());
    const double next = dirichlet_energy(u);
    if (next > e + 1e-13 * (1.0 + e)) {
      ++info.descent_violations;
      info.worst_ascent = std::max(info.worst_ascent, next - e);
    }
    info.sweeps = s;
    info.last_decrease = e - next;
    info.last_update = change;
    e = next;
    if (info.last_decrease <= tol_e && change <= tol_u) {
      info.converged = true;
      break;
    }
  }
  info.energy = e;
}

}  // namespace detail

/// Minimizes the discrete energy with the given outer data and interface.
/// Runs up to three deterministic initializations and keeps the lowest.
/// Non-convergence is reported through info.converged, not thrown.
inline QHalfMap minimize(std::shared_ptr<const HalfDomain> dom, int q, int n, const BoundaryData& data,
                         const SolverConfig& cfg = {}) {
  if (q < 1) throw DomainError("minimize: Q must be >= 1");
  if (!(cfg.eps_stop > 0.0)) throw DomainError("minimize: eps_stop must be positive");
  if (cfg.starts < 1 || cfg.starts > 3) throw DomainError("minimize: starts must be 1, 2 or 3");
  const QHalfMap pinned = detail::pinned_map(dom, q, n, data, cfg.collapsed);

  // Start 0: each stored sheet extended harmonically with the identity pairing.
  QHalfMap harmonic = pinned;
  {
    detail::Sweeper sw(harmonic, cfg);
    const double tol = 1e-9 * (1.0 + detail::data_scale(harmonic));
    for (int s = 0; s < cfg.max_sweeps && sw.has_free_nodes(); ++s)
      if (sw.sweep(false, sw.omega()) <= tol) break;
  }
  std::vector<QHalfMap> starts{harmonic};
  if (cfg.starts >= 2) {
    QHalfMap mean = harmonic;
    for (std::size_t id = 0; id < dom->size(); ++id) {
      const NodeTag t = dom->tag(id);
      auto flatten = [n](double* v, int sheets) {
        for (int c = 0; c < n; ++c) {
          double m = 0.0;
          for (int i = 0; i < sheets; ++i) m += v[i * n + c];
          for (int i = 0; i < sheets; ++i) v[i * n + c] = m / sheets;
        }
      };
      if (t == NodeTag::InteriorPlus) flatten(mean.plus_raw(id), q);
      if (t == NodeTag::InteriorMinus && q > 1) flatten(mean.minus_raw(id), q - 1);
      if (t == NodeTag::Interface && !cfg.collapsed && !dom->on_rim(id) && q > 1) {
        flatten(mean.minus_raw(id), q - 1);
        mean.sync_interface(id);
      }
    }
    starts.push_back(std::move(mean));
  }
  if (cfg.starts >= 3) {
    QHalfMap flat = pinned;
    Vec level(static_cast<std::size_t>(n), 0.0);
    std::size_t count = 0;
    for (std::size_t id = 0; id < dom->size(); ++id) {
      if (dom->tag(id) != NodeTag::Interface) continue;
      for (int c = 0; c < n; ++c) level[c] += flat.phi_raw(id)[c];
      ++count;
    }
    if (count > 0)
      for (double& v : level) v /= static_cast<double>(count);
    for (std::size_t id = 0; id < dom->size(); ++id) {
      const NodeTag t = dom->tag(id);
      if (t == NodeTag::InteriorPlus)
        for (int i = 0; i < q; ++i) std::copy(level.begin(), level.end(), flat.plus_raw(id) + i * n);
      if (t == NodeTag::InteriorMinus)
        for (int i = 0; i < q - 1; ++i) std::copy(level.begin(), level.end(), flat.minus_raw(id) + i * n);
      if (t == NodeTag::Interface && !cfg.collapsed && !dom->on_rim(id)) {
        for (int i = 0; i < q - 1; ++i) std::copy(level.begin(), level.end(), flat.minus_raw(id) + i * n);
        flat.sync_interface(id);
      }
    }
    starts.push_back(std::move(flat));
  }

  std::vector<double> energies;
  std::vector<int> sweeps;
  std::size_t best = 0;
  for (std::size_t k = 0; k < starts.size(); ++k) {
    detail::descend(starts[k], cfg);
    energies.push_back(starts[k].info.energy);
    sweeps.push_back(starts[k].info.sweeps);
    if (starts[k].info.energy < starts[best].info.energy) best = k;
  }
  QHalfMap out = std::move(starts[best]);
  out.info.start_energies = energies;
  out.info.start_sweeps = sweeps;
  out.info.best_start = static_cast<int>(best);
  for (double e : energies)
    if (std::abs(e - out.info.energy) > 1e-6 * (1.0 + out.info.energy)) out.info.starts_disagree = true;
  return out;
}

struct CollapseCheck {
  bool collapsed = false;
  double spread = 0.0;
};

/// Max over interface nodes of G(f+, Q[[phi]]).
inline CollapseCheck check_collapsed(const QHalfMap& u, double tol) {
  CollapseCheck r;
  const int q = u.multiplicity(), n = u.dim();
  for (std::size_t id = 0; id < u.size(); ++id) {
    if (u.domain().tag(id) != NodeTag::Interface) continue;
    const QPoint pinned = QPoint::repeated(q, std::span<const double>(u.phi_raw(id), static_cast<std::size_t>(n)));
    r.spread = std::max(r.spread, g_distance(u.plus(id), pinned));
  }
  r.collapsed = r.spread <= tol;
  return r;
}

struct CollapseDecomposition {
  std::vector<double> h;  // eta of f+ on Omega+ and the interface, eta of f- on Omega-
  double sheet_spread = 0.0;
  double harmonic_defect = 0.0;
  double odd_defect = std::numeric_limits<double>::quiet_NaN();
};

/// Splits a collapsed minimizer into the mean field and its departures from
/// Q[[h]] / (Q-1)[[h]]. Only scalar maps (n = 1) are supported.
inline CollapseDecomposition collapse_decompose(const QHalfMap& u) {
  if (!u.info.converged) throw NotConvergedError("collapse_decompose: input minimizer did not converge");
  if (u.dim() != 1) throw DimensionMismatch("collapse_decompose: needs n = 1");
  const HalfDomain& dom = u.domain();
  const int q = u.multiplicity();
  CollapseDecomposition out;
  out.h.assign(u.size(), 0.0);
  auto spread = [](const double* v, int sheets, double mean) {
    double s = 0.0;
    for (int i = 0; i < sheets; ++i) s += (v[i] - mean) * (v[i] - mean);
    return std::sqrt(s);
  };
  for (std::size_t id = 0; id < u.size(); ++id) {
    const NodeTag t = dom.tag(id);
    if (dom.on_side(id, Side::Plus)) {
      const QPoint v = u.plus(id);
      out.h[id] = eta_mean(v)[0];
      out.sheet_spread = std::max(out.sheet_spread, spread(u.plus_raw(id), q, out.h[id]));
    }
    if (dom.on_side(id, Side::Minus) && q > 1) {
      const double m = eta_mean(u.minus(id))[0];
      if (t != NodeTag::Interface) out.h[id] = m;
      out.sheet_spread = std::max(out.sheet_spread, spread(u.minus_raw(id), q - 1, m));
    }
  }
  const bool straight = dom.interface().straight;
  for (std::size_t id = 0; id < u.size(); ++id) {
    const NodeTag t = dom.tag(id);
    if (t != NodeTag::InteriorPlus && t != NodeTag::InteriorMinus && !(t == NodeTag::Interface && straight)) continue;
    double s = 0.0;
    bool full = true;
    for (int k = 0; k < 4; ++k) {
      const long b = dom.neighbour(id, k);
      if (b < 0) {
        full = false;
        break;
      }
      s += out.h[static_cast<std::size_t>(b)];
    }
    if (!full) continue;
    out.harmonic_defect = std::max(out.harmonic_defect, std::abs(0.25 * s - out.h[id]));
  }
  if (straight) {
    out.odd_defect = 0.0;
    for (std::size_t id = 0; id < u.size(); ++id) {
      const long m = dom.at(dom.grid_i(id), -dom.grid_j(id));
      if (m < 0) continue;
      out.odd_defect = std::max(out.odd_defect, std::abs(out.h[id] + out.h[static_cast<std::size_t>(m)]));
    }
  }
  return out;
}

/// Largest energy decrease produced by random single-sheet perturbations of
/// free nodes (magnitude `scale` times the local oscillation). A positive
/// value means some perturbation lowered the energy.
inline double minimality_spot_check(const QHalfMap& u, int trials, std::uint64_t seed, double scale = 0.1,
                                    bool collapsed = true) {
  const HalfDomain& dom = u.domain();
  const int q = u.multiplicity(), n = u.dim();
  std::vector<std::size_t> free;
  for (std::size_t id = 0; id < u.size(); ++id) {
    const NodeTag t = dom.tag(id);
    if (t == NodeTag::InteriorPlus || (t == NodeTag::InteriorMinus && q > 1) ||
        (t == NodeTag::Interface && !collapsed && q > 1 && !dom.on_rim(id)))
      free.push_back(id);
  }
  if (free.empty()) return 0.0;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, free.size() - 1);
  std::uniform_real_distribution<double> sign(-1.0, 1.0);
  QHalfMap v = u;
  double worst = -std::numeric_limits<double>::infinity();
  for (int t = 0; t < trials; ++t) {
    const std::size_t id = free[pick(rng)];
    const NodeTag tag = dom.tag(id);
    const bool on_minus = tag != NodeTag::InteriorPlus;
    const int sheets = on_minus ? q - 1 : q;
    double* vals = on_minus ? v.minus_raw(id) : v.plus_raw(id);
    // Local oscillation: spread of the values at the node and its neighbours.
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    auto scan = [&](const double* p, int s) {
      for (int i = 0; i < s * n; ++i) {
        lo = std::min(lo, p[i]);
        hi = std::max(hi, p[i]);
      }
    };
    scan(vals, sheets);
    for (int k = 0; k < 4; ++k) {
      const long b = dom.neighbour(id, k);
      if (b >= 0) scan(on_minus ? u.minus_raw(static_cast<std::size_t>(b)) : u.plus_raw(static_cast<std::size_t>(b)), sheets);
    }
    const double amp = scale * std::max(hi - lo, 1e-12);
    const int sheet = std::uniform_int_distribution<int>(0, sheets - 1)(rng);
    const double before = local_energy(v, id);
    std::vector<double> saved(vals, vals + sheets * n);
    for (int c = 0; c < n; ++c) vals[sheet * n + c] += amp * sign(rng);
    if (tag == NodeTag::Interface) v.sync_interface(id);
    const double after = local_energy(v, id);
    worst = std::max(worst, before - after);
    std::copy(saved.begin(), saved.end(), vals);
    if (tag == NodeTag::Interface) v.sync_interface(id);
  }
  return worst;
}

struct InterpolationReport {
  double band_energy = 0.0;     // energy of the blended map on band edges
  double energy_f = 0.0;        // band energy of f
  double energy_g = 0.0;        // band energy of g
  double distance_sq = 0.0;     // h^2 * sum over band nodes of G(f, g)^2
  double lambda = 0.0;
  /// lambda (E_f + E_g) + distance_sq / lambda
  double rhs() const { return lambda * (energy_f + energy_g) + distance_sq / lambda; }
};

struct Interpolation {
  QHalfMap map;
  InterpolationReport report;
};

/// Blends g (inside) into f (outer ring) across the band R - lambda <= |x| <= R
/// with matched straight segments; phi is kept at interface nodes.
inline Interpolation interpolate_annulus(const QHalfMap& f, const QHalfMap& g, double lambda) {
  const HalfDomain& dom = f.domain();
  if (&dom != &g.domain()) throw DomainError("interpolate_annulus: maps live on different domains");
  if (f.multiplicity() != g.multiplicity() || f.dim() != g.dim())
    throw DimensionMismatch("interpolate_annulus: maps differ in (Q, n)");
  if (lambda < 2.0 * dom.spacing())
    throw ResolutionError("interpolate_annulus: band width " + std::to_string(lambda) + " is below 2h = " +
                          std::to_string(2.0 * dom.spacing()));
  const int q = f.multiplicity(), n = f.dim();
  for (std::size_t id = 0; id < f.size(); ++id)
    if (dom.tag(id) == NodeTag::Interface)
      for (int c = 0; c < n; ++c)
        if (f.phi_raw(id)[c] != g.phi_raw(id)[c]) throw DomainError("interpolate_annulus: maps have different phi");
  const double inner = dom.radius() - lambda;
  auto weight = [&](std::size_t id) {
    const NodeTag t = dom.tag(id);
    if (t == NodeTag::OuterPlus || t == NodeTag::OuterMinus || (t == NodeTag::Interface && dom.on_rim(id))) return 1.0;
    return std::clamp((norm(dom.node(id)) - inner) / lambda, 0.0, 1.0);
  };
  Interpolation out{g, {}};
  QHalfMap& z = out.map;
  z.info = SolveInfo{};
  for (std::size_t id = 0; id < f.size(); ++id) {
    const double s = weight(id);
    if (s == 0.0) continue;
    const NodeTag t = dom.tag(id);
    if (plus_only(t)) z.set_plus(id, blend(g.plus(id), f.plus(id), s));
    if (minus_only(t) && q > 1) z.set_minus(id, blend(g.minus(id), f.minus(id), s));
    if (t == NodeTag::Interface && q > 1) {
      const QPoint m = blend(g.minus(id), f.minus(id), s);
      z.set_interface(id, std::span<const double>(f.phi_raw(id), static_cast<std::size_t>(n)), m.flat());
    }
  }
  InterpolationReport& rep = out.report;
  rep.lambda = lambda;
  std::vector<int> perm(static_cast<std::size_t>(q));
  auto in_band = [&](std::size_t id) { return norm(dom.node(id)) >= inner; };
  for (std::size_t a = 0; a < dom.size(); ++a) {
    if (!in_band(a)) continue;
    for (int k : {0, 2}) {
      const long b = dom.neighbour(a, k);
      if (b < 0 || !in_band(static_cast<std::size_t>(b))) continue;
      rep.band_energy += detail::edge_energy(z, a, static_cast<std::size_t>(b), perm);
      rep.energy_f += detail::edge_energy(f, a, static_cast<std::size_t>(b), perm);
      rep.energy_g += detail::edge_energy(g, a, static_cast<std::size_t>(b), perm);
    }
    double d2 = 0.0;
    if (dom.on_side(a, Side::Plus)) d2 += std::pow(g_distance(f.plus(a), g.plus(a)), 2);
    if (dom.on_side(a, Side::Minus) && q > 1) d2 += std::pow(g_distance(f.minus(a), g.minus(a)), 2);
    rep.distance_sq += d2 * dom.spacing() * dom.spacing();
  }
  return out;
}

}  // namespace qhalf
