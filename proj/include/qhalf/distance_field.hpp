#pragma once

// Modified distance d = |Phi(x)| where Phi flattens the interface: Phi maps
// x = c(t) + s n(t) (c the arclength-parametrized interface, n its unit
// normal) to (arclength(t), s). Phi(0) = 0, DPhi is a rotation along gamma
// and normals go to normals, so grad d is tangent to gamma.

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <span>
#include <vector>

#include "qhalf/halfdomain.hpp"

namespace qhalf {

struct DistanceSample {
  double d = 0.0;
  std::array<double, 2> grad{0.0, 0.0};
};

/// Evaluates d and grad d anywhere in the tubular neighbourhood of gamma.
class ModifiedDistance {
 public:
  explicit ModifiedDistance(InterfaceSpec iface, double extent = 2.0) : iface_(std::move(iface)) {
    if (iface_.straight) return;
    // Cumulative arclength at knots, refined between knots with Gauss-Legendre.
    knot_step_ = 1.0 / 128.0;
    const int half = static_cast<int>(std::ceil(extent / knot_step_));
    knot0_ = -half;
    arclen_.resize(static_cast<std::size_t>(2 * half + 1));
    arclen_[static_cast<std::size_t>(half)] = 0.0;
    for (int k = half + 1; k <= 2 * half; ++k)
      arclen_[k] = arclen_[k - 1] + gauss_length((k - 1 + knot0_) * knot_step_, (k + knot0_) * knot_step_);
    for (int k = half - 1; k >= 0; --k)
      arclen_[k] = arclen_[k + 1] - gauss_length((k + knot0_) * knot_step_, (k + 1 + knot0_) * knot_step_);
  }

  bool straight() const { return iface_.straight; }
  const InterfaceSpec& interface() const { return iface_; }

  /// Signed arclength of gamma from 0 to the point above t.
  double arclength(double t) const {
    if (iface_.straight) return t;
    const double u = t / knot_step_ - knot0_;
    long k = static_cast<long>(std::floor(u));
    k = std::clamp<long>(k, 0, static_cast<long>(arclen_.size()) - 1);
    const double tk = (k + knot0_) * knot_step_;
    return arclen_[static_cast<std::size_t>(k)] + gauss_length(tk, t);
  }

  /// Foot-point parameter t and signed normal offset s of x.
  std::array<double, 2> normal_coordinates(Point2 p) const {
    if (iface_.straight) return {p.x, p.y};
    double t = p.x;
    for (int it = 0; it < 50; ++it) {
      const double a = iface_.dpsi(t);
      const double dy = p.y - iface_.psi(t);
      const double f = (p.x - t) + dy * a;
      const double df = -1.0 - a * a + dy * iface_.d2psi(t);
      const double step = f / df;
      t -= step;
      if (std::abs(step) < 1e-15 * (1.0 + std::abs(t))) break;
    }
    const double a = iface_.dpsi(t);
    const double len = std::sqrt(1.0 + a * a);
    const double s = (-(p.x - t) * a + (p.y - iface_.psi(t))) / len;
    return {t, s};
  }

  DistanceSample eval(Point2 p) const {
    DistanceSample out;
    if (iface_.straight) {
      out.d = std::sqrt(p.x * p.x + p.y * p.y);
      if (out.d > 0.0) out.grad = {p.x / out.d, p.y / out.d};
      return out;
    }
    const auto [t, s] = normal_coordinates(p);
    const double l = arclength(t);
    out.d = std::sqrt(l * l + s * s);
    if (out.d == 0.0) return out;
    const double a = iface_.dpsi(t);
    const double len = std::sqrt(1.0 + a * a);
    const double kappa = iface_.d2psi(t) / (len * len * len);
    const double stretch = 1.0 - s * kappa;
    // grad d = (l T / (1 - s kappa) + s n) / d with T the unit tangent.
    const double tx = 1.0 / len, ty = a / len;
    const double nx = -a / len, ny = 1.0 / len;
    out.grad = {(l * tx / stretch + s * nx) / out.d, (l * ty / stretch + s * ny) / out.d};
    return out;
  }

  /// Hessian (xx, xy, yy) of d.
  std::array<double, 3> hessian(Point2 p) const {
    const double r = norm(p);
    if (r == 0.0) return {0.0, 0.0, 0.0};
    if (iface_.straight) {
      const double ux = p.x / r, uy = p.y / r;
      return {(1.0 - ux * ux) / r, -ux * uy / r, (1.0 - uy * uy) / r};
    }
    const double eps = 1e-5 * r;
    const auto gxp = eval({p.x + eps, p.y}).grad, gxm = eval({p.x - eps, p.y}).grad;
    const auto gyp = eval({p.x, p.y + eps}).grad, gym = eval({p.x, p.y - eps}).grad;
    const double hxx = (gxp[0] - gxm[0]) / (2 * eps);
    const double hyy = (gyp[1] - gym[1]) / (2 * eps);
    const double hxy = 0.5 * ((gxp[1] - gxm[1]) + (gyp[0] - gym[0])) / (2 * eps);
    return {hxx, hxy, hyy};
  }

  /// Point of gamma above parameter t and its unit normal.
  std::pair<Point2, std::array<double, 2>> interface_point(double t) const {
    const double a = iface_.dpsi(t);
    const double len = std::sqrt(1.0 + a * a);
    return {{t, iface_.psi(t)}, {-a / len, 1.0 / len}};
  }

 private:
  double gauss_length(double a, double b) const {
    static constexpr std::array<double, 8> xs{-0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
                                              -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
                                              0.7966664774136267,  0.9602898564975363};
    static constexpr std::array<double, 8> ws{0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
                                              0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
                                              0.2223810344533745, 0.1012285362903763};
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double s = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
      const double d = iface_.dpsi(mid + half * xs[k]);
      s += ws[k] * std::sqrt(1.0 + d * d);
    }
    return s * half;
  }

  InterfaceSpec iface_;
  double knot_step_ = 1.0;
  int knot0_ = 0;
  std::vector<double> arclen_;
};

/// Measured departures of d from |x| (items (i)-(iii) of the admissibility
/// conditions) and from tangency along gamma.
struct DistanceDefects {
  double value = 0.0;      // sup |d - |x|| / |x|^2
  double gradient = 0.0;   // sup |grad d - x/|x|| / |x|
  double hessian = 0.0;    // sup |D^2 d - (Id - xhat xhat)/|x||
  double tangency = 0.0;   // sup over gamma of |grad d . nu|
};

struct DistanceField {
  std::shared_ptr<const HalfDomain> domain;
  std::shared_ptr<const ModifiedDistance> map;
  std::vector<double> d;
  std::vector<std::array<double, 2>> grad;
  std::vector<std::array<double, 3>> hess;
  DistanceDefects defects;
};

namespace detail {

inline DistanceDefects measure_defects(const HalfDomain& dom, std::span<const double> d,
                                       std::span<const std::array<double, 2>> grad,
                                       std::span<const std::array<double, 3>> hess) {
  DistanceDefects k;
  for (std::size_t id = 0; id < dom.size(); ++id) {
    const Point2 p = dom.node(id);
    const double r = norm(p);
    if (r == 0.0) continue;
    const double ux = p.x / r, uy = p.y / r;
    k.value = std::max(k.value, std::abs(d[id] - r) / (r * r));
    k.gradient = std::max(k.gradient, std::hypot(grad[id][0] - ux, grad[id][1] - uy) / r);
    const double exx = hess[id][0] - (1.0 - ux * ux) / r;
    const double exy = hess[id][1] + ux * uy / r;
    const double eyy = hess[id][2] - (1.0 - uy * uy) / r;
    k.hessian = std::max(k.hessian, std::sqrt(exx * exx + 2 * exy * exy + eyy * eyy));
  }
  return k;
}

}  // namespace detail

/// Nodal d, grad d and D^2 d on the mesh, plus the defect constants. The
/// tangency residual is evaluated on gamma at the foot points of the
/// interface nodes.
inline DistanceField build_distance_field(std::shared_ptr<const HalfDomain> dom) {
  DistanceField f;
  f.domain = dom;
  f.map = std::make_shared<ModifiedDistance>(dom->interface(), 2.0 * dom->radius());
  const std::size_t n = dom->size();
  f.d.resize(n);
  f.grad.resize(n);
  f.hess.resize(n);
  for (std::size_t id = 0; id < n; ++id) {
    const auto s = f.map->eval(dom->node(id));
    f.d[id] = s.d;
    f.grad[id] = s.grad;
    f.hess[id] = f.map->hessian(dom->node(id));
  }
  f.defects = detail::measure_defects(*dom, f.d, f.grad, f.hess);
  if (!dom->interface().straight) {
    for (std::size_t id = 0; id < n; ++id) {
      if (dom->tag(id) != NodeTag::Interface) continue;
      const double t = f.map->normal_coordinates(dom->node(id))[0];
      const auto [q, nu] = f.map->interface_point(t);
      if (norm(q) < 1e-12) continue;
      const auto g = f.map->eval(q).grad;
      f.defects.tangency = std::max(f.defects.tangency, std::abs(g[0] * nu[0] + g[1] * nu[1]));
    }
  }
  return f;
}

struct DistanceTolerances {
  double max_value_constant = 10.0;
  double max_gradient_constant = 10.0;
  double max_hessian_constant = 10.0;
  double tangency = 1e-6;
};

struct DistanceReport {
  bool value_ok = false;
  bool gradient_ok = false;
  bool hessian_ok = false;
  bool tangency_ok = false;
  DistanceDefects measured;
  /// Constant C in the almost-monotonicity factor e^{C r}; the sum of the
  /// three measured defect constants (zero for the straight interface).
  double c_mono = 0.0;
  bool all_ok() const { return value_ok && gradient_ok && hessian_ok && tangency_ok; }
};

/// Re-measures the defects from the stored nodal data and checks them.
inline DistanceReport validate_distance_field(const DistanceField& field, DistanceTolerances tol = {}) {
  DistanceReport rep;
  rep.measured = detail::measure_defects(*field.domain, field.d, field.grad, field.hess);
  rep.measured.tangency = field.defects.tangency;
  rep.value_ok = std::isfinite(rep.measured.value) && rep.measured.value <= tol.max_value_constant;
  rep.gradient_ok = std::isfinite(rep.measured.gradient) && rep.measured.gradient <= tol.max_gradient_constant;
  rep.hessian_ok = std::isfinite(rep.measured.hessian) && rep.measured.hessian <= tol.max_hessian_constant;
  rep.tangency_ok = rep.measured.tangency <= tol.tangency;
  rep.c_mono = rep.measured.value + rep.measured.gradient + rep.measured.hessian;
  return rep;
}

}  // namespace qhalf
