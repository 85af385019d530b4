#pragma once

// Named closed-form data for the solver and closed-form maps for the
// frequency checks.

#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "qhalf/errors.hpp"
#include "qhalf/solver.hpp"

namespace qhalf {

/// Cubic polynomial in (x, y); coefficients of 1, x, y, x^2, xy, y^2, x^3, x^2y, xy^2, y^3.
struct Polynomial {
  std::vector<double> c;

  double operator()(Point2 p) const {
    const double m[10] = {1.0, p.x, p.y, p.x * p.x, p.x * p.y, p.y * p.y, p.x * p.x * p.x, p.x * p.x * p.y,
                          p.x * p.y * p.y, p.y * p.y * p.y};
    double s = 0.0;
    for (std::size_t k = 0; k < c.size(); ++k) s += c[k] * m[k];
    return s;
  }

  static Polynomial from(std::vector<double> coeffs) {
    if (coeffs.size() > 10) throw DomainError("Polynomial: at most 10 coefficients (degree 3)");
    return {std::move(coeffs)};
  }
};

enum class PhiMode { Zero, Trace };

inline PhiMode phi_mode(const std::string& s) {
  if (s == "zero") return PhiMode::Zero;
  if (s == "trace") return PhiMode::Trace;
  throw DomainError("phi must be \"zero\" or \"trace\", got \"" + s + "\"");
}

namespace detail {

// Every sheet of both sides equal to the same scalar function.
inline BoundaryData single_valued(int q, std::function<double(Point2)> f, PhiMode mode) {
  if (q < 1) throw DomainError("boundary data: Q must be >= 1");
  BoundaryData b;
  b.plus = [=](Point2 p) { return QPoint(q, 1, std::vector<double>(static_cast<std::size_t>(q), f(p))); };
  b.minus = [=](Point2 p) {
    return QPoint(std::max(q - 1, 1), 1, std::vector<double>(static_cast<std::size_t>(std::max(q - 1, 1)), f(p)));
  };
  if (mode == PhiMode::Trace) b.phi = [=](Point2 p) { return Vec{f(p)}; };
  else b.phi = [](Point2) { return Vec{0.0}; };
  return b;
}

}  // namespace detail

/// Q copies of a x + b y.
inline BoundaryData linear_data(int q, double a, double b, PhiMode mode = PhiMode::Trace) {
  return detail::single_valued(q, [=](Point2 p) { return a * p.x + b * p.y; }, mode);
}

/// Q copies of a (x^2 - y^2) + b 2xy.
inline BoundaryData quadratic_harmonic_data(int q, double a, double b, PhiMode mode = PhiMode::Trace) {
  return detail::single_valued(q, [=](Point2 p) { return a * (p.x * p.x - p.y * p.y) + 2.0 * b * p.x * p.y; }, mode);
}

/// Sheet i of a side with k sheets: y + c_i Im z^3, c_i spread evenly over
/// [-amplitude, amplitude]; phi = 0. Odd in y and harmonic sheet by sheet.
inline BoundaryData odd_cubic_data(int q, double amplitude = 0.5) {
  if (q < 1) throw DomainError("boundary data: Q must be >= 1");
  auto sheets = [amplitude](Point2 p, int count) {
    std::vector<double> v(static_cast<std::size_t>(count));
    const double im3 = 3 * p.x * p.x * p.y - p.y * p.y * p.y;
    for (int i = 0; i < count; ++i) {
      const double c = count == 1 ? 0.0 : amplitude * (2.0 * i / (count - 1) - 1.0);
      v[i] = p.y + c * im3;
    }
    return v;
  };
  BoundaryData b;
  b.plus = [=](Point2 p) { return QPoint(q, 1, sheets(p, q)); };
  b.minus = [=](Point2 p) { return QPoint(std::max(q - 1, 1), 1, sheets(p, std::max(q - 1, 1))); };
  b.phi = [](Point2) { return Vec{0.0}; };
  return b;
}

/// One polynomial per sheet on each side and one for phi.
inline BoundaryData custom_data(const std::vector<Polynomial>& plus, const std::vector<Polynomial>& minus,
                                const Polynomial& phi) {
  if (plus.empty()) throw DomainError("custom data: no plus sheets");
  if (plus.size() > 1 && minus.size() + 1 != plus.size())
    throw DimensionMismatch("custom data: need Q-1 minus sheets for Q plus sheets");
  BoundaryData b;
  b.plus = [=](Point2 p) {
    std::vector<double> v;
    for (const Polynomial& s : plus) v.push_back(s(p));
    return QPoint(static_cast<int>(v.size()), 1, v);
  };
  b.minus = [=](Point2 p) {
    std::vector<double> v;
    for (const Polynomial& s : minus) v.push_back(s(p));
    if (v.empty()) v.push_back(0.0);
    return QPoint(static_cast<int>(v.size()), 1, v);
  };
  b.phi = [=](Point2 p) { return Vec{phi(p)}; };
  return b;
}

/// The two values of Re z^{3/2}.
inline QPoint sqrt_branch(Point2 p) {
  const double w = std::pow(std::complex<double>(p.x, p.y), 1.5).real();
  return QPoint::scalars({w, -w});
}

/// Largest minus smallest sheet value of the data over the outer boundary.
inline double boundary_oscillation(const HalfDomain& dom, const BoundaryData& data, int q) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t id = 0; id < dom.size(); ++id) {
    const NodeTag t = dom.tag(id);
    if (t != NodeTag::OuterPlus && t != NodeTag::OuterMinus) continue;
    if (t == NodeTag::OuterMinus && q == 1) continue;
    const QPoint v = t == NodeTag::OuterPlus ? data.plus(dom.node(id)) : data.minus(dom.node(id));
    for (double x : v.flat()) {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
  }
  return hi > lo ? hi - lo : 0.0;
}

}  // namespace qhalf
