#pragma once

// Weighted frequency I = r D / H of multivalued maps with the cutoff
// phi(t) = 1 on [0, 1/2], 2(1 - t) on [1/2, 1], and the modified distance d.
// Integrals are cell sums: every node owns the h x h cell around it, sampled
// on an s x s sub-grid so that cells cut by the interface are weighted by the
// part that lies on the right side; the cutoff is integrated exactly per
// sub-cell.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "qhalf/distance_field.hpp"
#include "qhalf/errors.hpp"
#include "qhalf/halfdomain.hpp"
#include "qhalf/qpoint.hpp"
#include "qhalf/solver.hpp"

namespace qhalf {

/// One side of a map: Q sheets of R^n at every node of `side`.
struct SideField {
  std::shared_ptr<const HalfDomain> domain;
  Side side = Side::Plus;
  int q = 1;
  int n = 1;
  std::vector<double> values;  // node-major, q * n per node

  const double* at(std::size_t id) const { return values.data() + id * static_cast<std::size_t>(q * n); }
  double* at(std::size_t id) { return values.data() + id * static_cast<std::size_t>(q * n); }
};

using FieldSet = std::vector<SideField>;

/// f+ and, when Q > 1, f-.
inline FieldSet side_fields(const QHalfMap& u) {
  FieldSet out;
  const int q = u.multiplicity(), n = u.dim();
  SideField plus{u.domain_ptr(), Side::Plus, q, n, std::vector<double>(u.size() * static_cast<std::size_t>(q * n))};
  for (std::size_t id = 0; id < u.size(); ++id) std::copy(u.plus_raw(id), u.plus_raw(id) + q * n, plus.at(id));
  out.push_back(std::move(plus));
  if (q > 1) {
    SideField minus{u.domain_ptr(), Side::Minus, q - 1, n,
                    std::vector<double>(u.size() * static_cast<std::size_t>((q - 1) * n))};
    for (std::size_t id = 0; id < u.size(); ++id)
      std::copy(u.minus_raw(id), u.minus_raw(id) + (q - 1) * n, minus.at(id));
    out.push_back(std::move(minus));
  }
  return out;
}

/// Samples a closed-form map at the nodes of one side.
inline SideField sample_field(std::shared_ptr<const HalfDomain> dom, Side side, int q, int n,
                              const std::function<QPoint(Point2)>& f) {
  SideField s{dom, side, q, n, std::vector<double>(dom->size() * static_cast<std::size_t>(q * n), 0.0)};
  for (std::size_t id = 0; id < dom->size(); ++id) {
    if (!dom->on_side(id, side)) continue;
    const QPoint v = f(dom->node(id));
    if (v.multiplicity() != q || v.dim() != n) throw DimensionMismatch("sample_field: map returned the wrong shape");
    std::copy(v.flat().begin(), v.flat().end(), s.at(id));
  }
  return s;
}

inline double cutoff(double t) {
  if (t <= 0.5) return 1.0;
  if (t >= 1.0) return 0.0;
  return 2.0 * (1.0 - t);
}
/// -phi'(t)
inline double cutoff_slope(double t) { return (t > 0.5 && t < 1.0) ? 2.0 : 0.0; }

struct FrequencyConfig {
  /// Largest radius, as a fraction of the domain radius.
  double r_max_fraction = 0.9;
  double ratio = 0.95;
  /// Sub-samples per cell side.
  int subsamples = 4;
  /// A radius is reliable when the annulus r/2 <= d <= r spans this many cells.
  int reliable_cells = 8;
  /// Smallest radius scanned, in units of h.
  double r_min_cells = 4.0;
};

/// Cell integrand data per node, independent of r.
namespace detail {

struct NodeTerms {
  double f2 = 0.0;               // |f|^2
  std::array<double, 2> a{};     // sum_i f_i . d_k f_i
  std::array<double, 3> b{};     // sum_i d_k f_i . d_l f_i  (xx, xy, yy)
};

struct CellSample {
  double d = 0.0;
  double gx = 0.0, gy = 0.0;
  double weight = 0.0;  // area
  double a = 0.0, b = 0.0;  // spread of d over the sub-cell, a >= b
};

// d is taken linear on a sub-cell, d = d0 + a U + b V with U, V uniform on
// [-1/2, 1/2]. cdf(x) is the area fraction where d - d0 <= x and icdf its
// antiderivative.
inline double cell_cdf(double a, double b, double x) {
  const double y = x + 0.5 * (a + b);
  if (y <= 0.0) return 0.0;
  if (y >= a + b) return 1.0;
  if (b <= 1e-12 * a) return y / a;
  if (y <= b) return y * y / (2 * a * b);
  if (y <= a) return (y - 0.5 * b) / a;
  const double z = a + b - y;
  return 1.0 - z * z / (2 * a * b);
}

inline double cell_icdf(double a, double b, double x) {
  const double y = x + 0.5 * (a + b);
  if (y <= 0.0) return 0.0;
  if (y >= a + b) return 0.5 * (a + b) + (y - (a + b));
  if (b <= 1e-12 * a) return y * y / (2 * a);
  if (y <= b) return y * y * y / (6 * a * b);
  if (y <= a) return b * b / (6 * a) + ((y - 0.5 * b) * (y - 0.5 * b) - 0.25 * b * b) / (2 * a);
  const double z = a + b - y;
  return b * b / (6 * a) + 0.5 * (a - b) + (y - a) - (b * b * b - z * z * z) / (6 * a * b);
}

// Sub-cell averages of phi(d / r) and -phi'(d / r).
inline double mean_cutoff(const CellSample& c, double r) {
  if (c.a == 0.0) return cutoff(c.d / r);
  return 2.0 / r * (cell_icdf(c.a, c.b, r - c.d) - cell_icdf(c.a, c.b, 0.5 * r - c.d));
}
inline double mean_cutoff_slope(const CellSample& c, double r) {
  if (c.a == 0.0) return cutoff_slope(c.d / r);
  return 2.0 * (cell_cdf(c.a, c.b, r - c.d) - cell_cdf(c.a, c.b, 0.5 * r - c.d));
}

// One-sided differences matched to the node value. |d_k f|^2 is the mean of
// the squared forward and backward differences (the edge form of the energy);
// the mixed terms use their average v. B is V = sum v v^T plus a nonnegative
// diagonal, so (g . A)^2 <= |f|^2 g^T B g holds pointwise.
inline std::vector<NodeTerms> node_terms(const SideField& f) {
  const HalfDomain& dom = *f.domain;
  const int q = f.q, n = f.n;
  const double h = dom.spacing();
  std::vector<NodeTerms> out(dom.size());
  std::vector<int> perm(static_cast<std::size_t>(q));
  std::vector<double> v_avg(static_cast<std::size_t>(2 * q * n));
  for (std::size_t id = 0; id < dom.size(); ++id) {
    if (!dom.on_side(id, f.side)) continue;
    const double* v = f.at(id);
    std::array<double, 2> square{0.0, 0.0};
    for (int axis = 0; axis < 2; ++axis) {
      double* dk = v_avg.data() + axis * q * n;
      std::fill(dk, dk + q * n, 0.0);
      int used = 0;
      for (int dir = 0; dir < 2; ++dir) {
        const long nb = dom.neighbour(id, 2 * axis + dir);
        if (nb < 0 || !dom.on_side(static_cast<std::size_t>(nb), f.side)) continue;
        const double* w = f.at(static_cast<std::size_t>(nb));
        square[axis] += detail::match_raw(v, w, q, n, perm.data()) / (h * h);
        const double sign = dir == 0 ? 1.0 : -1.0;
        for (int i = 0; i < q; ++i)
          for (int c = 0; c < n; ++c) dk[i * n + c] += sign * (w[perm[i] * n + c] - v[i * n + c]) / h;
        ++used;
      }
      if (used == 2) {
        square[axis] *= 0.5;
        for (int k = 0; k < q * n; ++k) dk[k] *= 0.5;
      }
    }
    NodeTerms& t = out[id];
    const double* dx = v_avg.data();
    const double* dy = v_avg.data() + q * n;
    double vxx = 0.0, vyy = 0.0;
    for (int k = 0; k < q * n; ++k) {
      t.f2 += v[k] * v[k];
      t.a[0] += v[k] * dx[k];
      t.a[1] += v[k] * dy[k];
      vxx += dx[k] * dx[k];
      t.b[1] += dx[k] * dy[k];
      vyy += dy[k] * dy[k];
    }
    t.b[0] = std::max(square[0], vxx);
    t.b[2] = std::max(square[1], vyy);
  }
  return out;
}

}  // namespace detail

/// D, H, E and Gq at a given r for a fixed set of side fields.
class FrequencyEvaluator {
 public:
  FrequencyEvaluator(const FieldSet& fields, const DistanceField& dist, const FrequencyConfig& cfg = {}) : cfg_(cfg) {
    if (fields.empty()) throw DomainError("frequency: no fields");
    for (const SideField& f : fields)
      if (f.domain.get() != dist.domain.get()) throw DomainError("frequency: field and distance live on different meshes");
    const HalfDomain& dom = *dist.domain;
    h_ = dom.spacing();
    const int s = std::max(1, cfg.subsamples);
    // Interface cells are split by the polyline through the interface nodes,
    // the curve on which the discrete problem imposes its interface values.
    const int m = dom.half_width();
    std::vector<double> row(static_cast<std::size_t>(2 * m + 1), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t id = 0; id < dom.size(); ++id)
      if (dom.tag(id) == NodeTag::Interface) row[static_cast<std::size_t>(dom.grid_i(id) + m)] = dom.node(id).y;
    auto polyline = [&](int i, double x) {
      const double xi = i * h_, yi = row[static_cast<std::size_t>(i + m)];
      const int k = x >= xi ? i + 1 : i - 1;
      if (k < -m || k > m || std::isnan(row[static_cast<std::size_t>(k + m)])) return yi;
      return yi + (row[static_cast<std::size_t>(k + m)] - yi) * std::abs(x - xi) / h_;
    };
    const double area = h_ * h_ / (s * s);
    for (const SideField& f : fields) {
      Part part;
      part.terms = detail::node_terms(f);
      for (std::size_t id = 0; id < dom.size(); ++id) {
        if (!dom.on_side(id, f.side)) continue;
        const Point2 c = dom.node(id);
        const bool split = dom.tag(id) == NodeTag::Interface && f.side != Side::Both;
        for (int a = 0; a < s; ++a) {
          for (int b = 0; b < s; ++b) {
            const Point2 p{c.x + h_ * ((a + 0.5) / s - 0.5), c.y + h_ * ((b + 0.5) / s - 0.5)};
            if (!dom.contains(p, Side::Both)) continue;
            if (split) {
              const double below = p.y - polyline(dom.grid_i(id), p.x);
              if (f.side == Side::Plus ? below < 0.0 : below > 0.0) continue;
            }
            const DistanceSample ds = dist.map->eval(p);
            if (ds.d == 0.0) continue;
            part.nodes.push_back(id);
            double sa = std::abs(ds.grad[0]) * h_ / s, sb = std::abs(ds.grad[1]) * h_ / s;
            if (sa < sb) std::swap(sa, sb);
            part.samples.push_back({ds.d, ds.grad[0], ds.grad[1], area, sa, sb});
          }
        }
      }
      parts_.push_back(std::move(part));
    }
  }

  double spacing() const { return h_; }

  double D(double r) const {
    check_radius(r);
    return reduce([&](const detail::NodeTerms& t, const detail::CellSample& c) {
      return c.weight * detail::mean_cutoff(c, r) * (t.b[0] + t.b[2]);
    });
  }

  double H(double r) const {
    check_radius(r);
    std::size_t hits = 0;
    const double v = reduce([&](const detail::NodeTerms& t, const detail::CellSample& c) {
      const double w = detail::mean_cutoff_slope(c, r);
      if (w == 0.0) return 0.0;
      ++hits;
      return c.weight * w * (c.gx * c.gx + c.gy * c.gy) * t.f2 / c.d;
    });
    if (hits == 0) throw ResolutionError("frequency: annulus r/2 <= d <= r at r = " + std::to_string(r) + " holds no samples");
    return v;
  }

  double E(double r) const {
    check_radius(r);
    return reduce([&](const detail::NodeTerms& t, const detail::CellSample& c) {
             const double w = detail::mean_cutoff_slope(c, r);
             if (w == 0.0) return 0.0;
             return c.weight * w * (c.gx * t.a[0] + c.gy * t.a[1]);
           }) /
           r;
  }

  double Gq(double r) const {
    check_radius(r);
    return reduce([&](const detail::NodeTerms& t, const detail::CellSample& c) {
             const double w = detail::mean_cutoff_slope(c, r);
             if (w == 0.0) return 0.0;
             const double g2 = c.gx * c.gx + c.gy * c.gy;
             const double quad = c.gx * c.gx * t.b[0] + 2 * c.gx * c.gy * t.b[1] + c.gy * c.gy * t.b[2];
             return c.weight * w * (c.d / r) / g2 * quad;
           }) /
           r;
  }

  bool reliable(double r) const { return r / 2.0 >= cfg_.reliable_cells * h_; }

 private:
  struct Part {
    std::vector<detail::NodeTerms> terms;
    std::vector<std::size_t> nodes;
    std::vector<detail::CellSample> samples;
  };

  static void check_radius(double r) {
    if (!(r > 0.0)) throw DomainError("frequency: r must be positive");
  }

  template <class F>
  double reduce(F&& integrand) const {
    double s = 0.0;
    for (const Part& p : parts_)
      for (std::size_t k = 0; k < p.samples.size(); ++k) s += integrand(p.terms[p.nodes[k]], p.samples[k]);
    return s;
  }

  FrequencyConfig cfg_;
  double h_ = 0.0;
  std::vector<Part> parts_;
};

inline double compute_D(const FieldSet& f, const DistanceField& d, double r) { return FrequencyEvaluator(f, d).D(r); }
inline double compute_H(const FieldSet& f, const DistanceField& d, double r) { return FrequencyEvaluator(f, d).H(r); }
inline double compute_E(const FieldSet& f, const DistanceField& d, double r) { return FrequencyEvaluator(f, d).E(r); }
inline double compute_Gq(const FieldSet& f, const DistanceField& d, double r) { return FrequencyEvaluator(f, d).Gq(r); }

/// Quadrature part of the monotonicity constant, C_quad = kappa * h / r_min.
/// kappa is measured once on the Q = 1 harmonic map 2xy (see the calibration
/// test) and kept fixed.
inline constexpr double kQuadratureKappa = 1.0;

struct FrequencyScan {
  std::vector<double> r, D, H, E, Gq, I;
  std::vector<char> reliable;
  std::vector<double> outer_residual;   // |D - E| / D
  std::vector<double> cs_residual;      // (E^2 - H Gq) / (H Gq), <= 0 up to rounding
  double h = 0.0;
  double I0 = std::numeric_limits<double>::quiet_NaN();
  double c_mono = 0.0;
  double c_eff = 0.0;
  bool truncated = false;

  std::vector<std::size_t> reliable_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < r.size(); ++k)
      if (reliable[k]) out.push_back(k);
    return out;
  }
};

/// All quantities on r_k = r_max * ratio^k down to r_min_cells * h.
inline FrequencyScan frequency_scan(const FieldSet& fields, const DistanceField& dist, const FrequencyConfig& cfg = {},
                                    std::optional<double> c_mono = std::nullopt) {
  const FrequencyEvaluator ev(fields, dist, cfg);
  FrequencyScan sc;
  sc.h = ev.spacing();
  sc.c_mono = c_mono ? *c_mono : validate_distance_field(dist).c_mono;
  const double r_max = cfg.r_max_fraction * dist.domain->radius();
  for (double r = r_max; r >= cfg.r_min_cells * sc.h; r *= cfg.ratio) {
    double H = 0.0;
    try {
      H = ev.H(r);
    } catch (const ResolutionError&) {
      sc.truncated = true;
      break;
    }
    const double D = ev.D(r), E = ev.E(r), G = ev.Gq(r);
    sc.r.push_back(r);
    sc.D.push_back(D);
    sc.H.push_back(H);
    sc.E.push_back(E);
    sc.Gq.push_back(G);
    sc.I.push_back(H > 0.0 ? r * D / H : std::numeric_limits<double>::quiet_NaN());
    sc.reliable.push_back(ev.reliable(r) && H > 0.0 ? 1 : 0);
    sc.outer_residual.push_back(D > 0.0 ? std::abs(D - E) / D : 0.0);
    sc.cs_residual.push_back(H * G > 0.0 ? (E * E - H * G) / (H * G) : 0.0);
  }
  const auto rel = sc.reliable_indices();
  if (!rel.empty()) {
    const double r_min = sc.r[rel.back()];
    double s = 0.0;
    int count = 0;
    for (std::size_t k : rel)
      if (sc.r[k] <= r_min * std::sqrt(10.0)) {
        s += sc.I[k];
        ++count;
      }
    sc.I0 = s / count;
    sc.c_eff = sc.c_mono + kQuadratureKappa * sc.h / r_min;
  } else {
    sc.c_eff = sc.c_mono;
  }
  return sc;
}

inline FrequencyScan frequency_scan(const QHalfMap& u, const DistanceField& dist, const FrequencyConfig& cfg = {}) {
  return frequency_scan(side_fields(u), dist, cfg);
}

struct IdentityCheck {
  bool pass = true;
  double worst = 0.0;
  std::vector<double> profile;  // per scan radius; NaN where not checked
};

/// max |D - E| / D over reliable radii.
inline IdentityCheck check_outer_identity(const FrequencyScan& sc, double tol = 0.05) {
  IdentityCheck out;
  out.profile.assign(sc.r.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t k : sc.reliable_indices()) {
    if (sc.D[k] == 0.0 && sc.E[k] == 0.0) continue;
    out.profile[k] = sc.outer_residual[k];
    out.worst = std::max(out.worst, sc.outer_residual[k]);
  }
  out.pass = out.worst <= tol;
  return out;
}

/// |H' - H/r - 2E| / H with H' from centred differences in log r.
inline IdentityCheck check_H_derivative(const FrequencyScan& sc, double tol = 0.05) {
  IdentityCheck out;
  out.profile.assign(sc.r.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t k = 1; k + 1 < sc.r.size(); ++k) {
    if (!sc.reliable[k - 1] || !sc.reliable[k] || !sc.reliable[k + 1]) continue;
    if (!(sc.H[k - 1] > 0.0 && sc.H[k] > 0.0 && sc.H[k + 1] > 0.0)) continue;
    const double slope = (std::log(sc.H[k - 1]) - std::log(sc.H[k + 1])) / (std::log(sc.r[k - 1]) - std::log(sc.r[k + 1]));
    const double dH = slope * sc.H[k] / sc.r[k];
    const double res = std::abs(dH - sc.H[k] / sc.r[k] - 2.0 * sc.E[k]) / sc.H[k];
    out.profile[k] = res;
    out.worst = std::max(out.worst, res);
  }
  out.pass = out.worst <= sc.c_mono + tol;
  return out;
}

struct MonotonicityCheck {
  bool pass = true;
  double worst_violation = 0.0;  // max over consecutive pairs of e^{Cs}I(s) / (e^{Ct}I(t)) - 1, s < t
  double c_eff = 0.0;
};

/// e^{C_eff r} I(r) nondecreasing across consecutive reliable radii, up to (1 + tol).
inline MonotonicityCheck check_monotonicity(const FrequencyScan& sc, double tol = 0.02,
                                            std::optional<double> c_eff = std::nullopt) {
  MonotonicityCheck out;
  out.c_eff = c_eff ? *c_eff : sc.c_eff;
  const auto rel = sc.reliable_indices();
  for (std::size_t j = 1; j < rel.size(); ++j) {
    const std::size_t big = rel[j - 1], small = rel[j];
    const double lhs = std::exp(out.c_eff * sc.r[small]) * sc.I[small];
    const double rhs = std::exp(out.c_eff * sc.r[big]) * sc.I[big];
    out.worst_violation = std::max(out.worst_violation, lhs / rhs - 1.0);
  }
  out.pass = out.worst_violation <= tol;
  return out;
}

struct DoublingCheck {
  bool pass = true;
  bool h_pass = true;
  bool d_pass = true;
  int pairs = 0;
  /// Smallest slack (log of bound ratio) seen on each side; negative = violated.
  double h_lower_margin = std::numeric_limits<double>::infinity();
  double h_upper_margin = std::numeric_limits<double>::infinity();
  double d_lower_margin = std::numeric_limits<double>::infinity();
  double d_upper_margin = std::numeric_limits<double>::infinity();
};

/// Two-sided H and D comparison bounds for all reliable pairs s < t within
/// the smallest decade of reliable radii (m = 2).
inline DoublingCheck check_doubling_bounds(const FrequencyScan& sc, double lambda) {
  if (!(lambda > 1.0)) throw DomainError("check_doubling_bounds: lambda must exceed 1");
  DoublingCheck out;
  const auto rel = sc.reliable_indices();
  if (rel.empty() || !std::isfinite(sc.I0)) return out;
  const double r_min = sc.r[rel.back()];
  std::vector<std::size_t> decade;
  for (std::size_t k : rel)
    if (sc.r[k] <= 10.0 * r_min) decade.push_back(k);
  const double c = sc.c_eff, i0 = sc.I0;
  for (std::size_t a = 0; a < decade.size(); ++a) {
    for (std::size_t b = a + 1; b < decade.size(); ++b) {
      const std::size_t kt = decade[a], ks = decade[b];  // r[kt] > r[ks]
      const double t = sc.r[kt], s = sc.r[ks];
      const double lr = std::log(t / s);
      const double lh = std::log(sc.H[kt] / sc.H[ks]);
      const double ld = std::log(sc.D[kt] / sc.D[ks]);
      out.h_lower_margin = std::min(out.h_lower_margin, lh - (-c * (t - s) + (1.0 + 2.0 * i0 / lambda) * lr));
      out.h_upper_margin = std::min(out.h_upper_margin, (c * (t - s) + (1.0 + 2.0 * lambda * i0) * lr) - lh);
      out.d_lower_margin =
          std::min(out.d_lower_margin, ld - (-2.0 * std::log(lambda) - c * (t - s) + (2.0 * i0 / lambda) * lr));
      out.d_upper_margin =
          std::min(out.d_upper_margin, (2.0 * std::log(lambda) + c * (t - s) + (2.0 * lambda * i0) * lr) - ld);
      ++out.pairs;
    }
  }
  out.h_pass = out.h_lower_margin >= 0.0 && out.h_upper_margin >= 0.0;
  out.d_pass = out.d_lower_margin >= 0.0 && out.d_upper_margin >= 0.0;
  out.pass = out.h_pass && out.d_pass;
  return out;
}

namespace detail {

// Bilinear interpolation of one side field at p with all corners matched to
// the heaviest available corner. Falls back to the nearest node of the side.
inline bool sample_side(const SideField& f, Point2 p, double* out) {
  const HalfDomain& dom = *f.domain;
  const double h = dom.spacing();
  const int q = f.q, n = f.n;
  const double gx = p.x / h, gy = p.y / h;
  const int i0 = static_cast<int>(std::floor(gx)), j0 = static_cast<int>(std::floor(gy));
  const double tx = gx - i0, ty = gy - j0;
  std::array<long, 4> ids{dom.at(i0, j0), dom.at(i0 + 1, j0), dom.at(i0, j0 + 1), dom.at(i0 + 1, j0 + 1)};
  std::array<double, 4> w{(1 - tx) * (1 - ty), tx * (1 - ty), (1 - tx) * ty, tx * ty};
  double wsum = 0.0;
  int ref = -1;
  for (int c = 0; c < 4; ++c) {
    if (ids[c] < 0 || !dom.on_side(static_cast<std::size_t>(ids[c]), f.side)) {
      w[c] = 0.0;
      continue;
    }
    wsum += w[c];
    if (ref < 0 || w[c] > w[ref]) ref = c;
  }
  if (ref < 0 || wsum <= 0.0) {
    // Nearest node of the side within two cells.
    double best = std::numeric_limits<double>::infinity();
    long pick = -1;
    for (int dj = -2; dj <= 3; ++dj)
      for (int di = -2; di <= 3; ++di) {
        const long id = dom.at(i0 + di, j0 + dj);
        if (id < 0 || !dom.on_side(static_cast<std::size_t>(id), f.side)) continue;
        const Point2 c = dom.node(static_cast<std::size_t>(id));
        const double dd = std::hypot(c.x - p.x, c.y - p.y);
        if (dd < best) {
          best = dd;
          pick = id;
        }
      }
    if (pick < 0) return false;
    std::copy(f.at(static_cast<std::size_t>(pick)), f.at(static_cast<std::size_t>(pick)) + q * n, out);
    return true;
  }
  const double* base = f.at(static_cast<std::size_t>(ids[ref]));
  std::fill(out, out + q * n, 0.0);
  std::vector<int> perm(static_cast<std::size_t>(q));
  for (int c = 0; c < 4; ++c) {
    if (w[c] == 0.0) continue;
    const double* v = f.at(static_cast<std::size_t>(ids[c]));
    detail::match_raw(base, v, q, n, perm.data());
    for (int i = 0; i < q; ++i)
      for (int k = 0; k < n; ++k) out[i * n + k] += w[c] / wsum * v[perm[i] * n + k];
  }
  return true;
}

}  // namespace detail

struct BlowUp {
  QHalfMap map;
  double delta = 0.0;
  double energy = 0.0;  // discrete energy of the rescaled map
};

/// f(p + r x) / Delta on the unit disk, with Delta^2 the energy of f in
/// B_r(p) (edges whose midpoint lies in the ball). Values are resampled by
/// matched bilinear interpolation; phi is taken from the nearest interface node.
inline BlowUp blow_up_rescale(const QHalfMap& u, Point2 p, double r, double h_out = 1.0 / 128) {
  const HalfDomain& src = u.domain();
  if (!(r > 0.0)) throw DomainError("blow_up_rescale: r must be positive");
  if (norm(p) + r > src.radius() * (1.0 + 1e-12)) throw DomainError("blow_up_rescale: B_r(p) leaves the domain");
  double delta2 = 0.0;
  std::vector<int> perm(static_cast<std::size_t>(u.multiplicity()));
  for (std::size_t a = 0; a < src.size(); ++a) {
    for (int k : {0, 2}) {
      const long b = src.neighbour(a, k);
      if (b < 0) continue;
      const Point2 pa = src.node(a), pb = src.node(static_cast<std::size_t>(b));
      const Point2 mid{0.5 * (pa.x + pb.x) - p.x, 0.5 * (pa.y + pb.y) - p.y};
      if (norm(mid) <= r) delta2 += detail::edge_energy(u, a, static_cast<std::size_t>(b), perm);
    }
  }
  if (!(delta2 > 0.0)) throw DegenerateBlowUp("blow_up_rescale: the map has no energy in B_r(p)");
  const double delta = std::sqrt(delta2);
  auto dom = build_halfdisk(1.0, src.interface().rescaled(p, r), h_out);
  const int q = u.multiplicity(), n = u.dim();
  QHalfMap out(dom, q, n);
  const FieldSet fields = side_fields(u);
  std::vector<double> buf(static_cast<std::size_t>(q * n));
  for (std::size_t id = 0; id < dom->size(); ++id) {
    const Point2 y = dom->node(id);
    const Point2 x{p.x + r * y.x, p.y + r * y.y};
    const NodeTag t = dom->tag(id);
    if (plus_only(t)) {
      if (!detail::sample_side(fields[0], x, buf.data())) throw DomainError("blow_up_rescale: no source data near a node");
      for (double& v : buf) v /= delta;
      out.set_plus(id, QPoint(q, n, buf));
    } else if (minus_only(t)) {
      if (q == 1) continue;
      std::vector<double> m(static_cast<std::size_t>((q - 1) * n));
      if (!detail::sample_side(fields[1], x, m.data())) throw DomainError("blow_up_rescale: no source data near a node");
      for (double& v : m) v /= delta;
      out.set_minus(id, QPoint(q - 1, n, m));
    } else {
      // Nearest source interface node supplies phi.
      double best = std::numeric_limits<double>::infinity();
      std::size_t pick = 0;
      const double hs = src.spacing();
      const int ci = static_cast<int>(std::lround(x.x / hs)), cj = static_cast<int>(std::lround(x.y / hs));
      for (int dj = -2; dj <= 2; ++dj)
        for (int di = -2; di <= 2; ++di) {
          const long sid = src.at(ci + di, cj + dj);
          if (sid < 0 || src.tag(static_cast<std::size_t>(sid)) != NodeTag::Interface) continue;
          const Point2 c = src.node(static_cast<std::size_t>(sid));
          const double dd = std::hypot(c.x - x.x, c.y - x.y);
          if (dd < best) {
            best = dd;
            pick = static_cast<std::size_t>(sid);
          }
        }
      if (!std::isfinite(best)) throw DomainError("blow_up_rescale: no interface node near the rescaled interface");
      Vec phi = u.phi(pick);
      for (double& v : phi) v /= delta;
      std::vector<double> m(static_cast<std::size_t>((q - 1) * n));
      if (q > 1) {
        if (!detail::sample_side(fields[1], x, m.data())) throw DomainError("blow_up_rescale: no source data near a node");
        for (double& v : m) v /= delta;
      }
      out.set_interface(id, phi, m);
    }
  }
  out.info = u.info;
  const double energy = dirichlet_energy(out);
  return {std::move(out), delta, energy};
}

/// max over node pairs (x, x/2) of G(u(x/2), 2^{-I0} u(x)), divided by the
/// largest |u(x)| over the same pairs.
inline double homogeneity_defect(const FieldSet& fields, double i0) {
  double worst = 0.0, scale = 0.0;
  const double s = std::pow(0.5, i0);
  for (const SideField& f : fields) {
    const HalfDomain& dom = *f.domain;
    const int q = f.q, n = f.n;
    std::vector<int> perm(static_cast<std::size_t>(q));
    std::vector<double> scaled(static_cast<std::size_t>(q * n));
    for (std::size_t id = 0; id < dom.size(); ++id) {
      const int i = dom.grid_i(id), j = dom.grid_j(id);
      if (i % 2 != 0 || j % 2 != 0 || !dom.on_side(id, f.side)) continue;
      const long half = dom.at(i / 2, j / 2);
      if (half < 0 || !dom.on_side(static_cast<std::size_t>(half), f.side)) continue;
      const double* v = f.at(id);
      for (int k = 0; k < q * n; ++k) scaled[k] = s * v[k];
      worst = std::max(worst, std::sqrt(detail::match_raw(f.at(static_cast<std::size_t>(half)), scaled.data(), q, n, perm.data())));
      double norm2 = 0.0;
      for (int k = 0; k < q * n; ++k) norm2 += v[k] * v[k];
      scale = std::max(scale, std::sqrt(norm2));
    }
  }
  return scale > 0.0 ? worst / scale : 0.0;
}

inline double homogeneity_defect(const QHalfMap& u, double i0) { return homogeneity_defect(side_fields(u), i0); }

}  // namespace qhalf
