#pragma once

// A disk of radius R cut by an interface curve gamma = {y = psi(x)} into an
// upper half Omega+ and a lower half Omega-, discretized on the square grid
// of spacing h. Every node carries exactly one tag.

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "qhalf/errors.hpp"

namespace qhalf {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

inline double norm(Point2 p) { return std::sqrt(p.x * p.x + p.y * p.y); }

/// Interface curve as a graph y = psi(x). The straight interface is the
/// special case psi == 0 and is flagged so that downstream code can use exact
/// formulas for it.
struct InterfaceSpec {
  std::string name = "straight";
  bool straight = true;
  std::function<double(double)> psi = [](double) { return 0.0; };
  std::function<double(double)> dpsi = [](double) { return 0.0; };
  std::function<double(double)> d2psi = [](double) { return 0.0; };
  std::function<double(double)> d3psi = [](double) { return 0.0; };

  static InterfaceSpec flat() { return {}; }

  static InterfaceSpec graph(std::string name, std::function<double(double)> psi, std::function<double(double)> dpsi,
                             std::function<double(double)> d2psi, std::function<double(double)> d3psi) {
    InterfaceSpec s;
    s.name = std::move(name);
    s.straight = false;
    s.psi = std::move(psi);
    s.dpsi = std::move(dpsi);
    s.d2psi = std::move(d2psi);
    s.d3psi = std::move(d3psi);
    return s;
  }

  /// psi(x) = a x^2
  static InterfaceSpec parabola(double a) {
    return graph(
        "parabola(" + std::to_string(a) + ")", [a](double x) { return a * x * x; }, [a](double x) { return 2 * a * x; },
        [a](double) { return 2 * a; }, [](double) { return 0.0; });
  }

  /// psi(x) = A sin(k x)
  static InterfaceSpec sine(double amp, double k) {
    return graph(
        "sine(" + std::to_string(amp) + "," + std::to_string(k) + ")",
        [=](double x) { return amp * std::sin(k * x); }, [=](double x) { return amp * k * std::cos(k * x); },
        [=](double x) { return -amp * k * k * std::sin(k * x); },
        [=](double x) { return -amp * k * k * k * std::cos(k * x); });
  }

  /// psi(x) = c1 x + c2 x^2 + c3 x^3
  static InterfaceSpec cubic(double c1, double c2, double c3) {
    return graph(
        "cubic(" + std::to_string(c1) + "," + std::to_string(c2) + "," + std::to_string(c3) + ")",
        [=](double x) { return ((c3 * x + c2) * x + c1) * x; }, [=](double x) { return (3 * c3 * x + 2 * c2) * x + c1; },
        [=](double x) { return 6 * c3 * x + 2 * c2; }, [=](double) { return 6 * c3; });
  }

  /// psi(x / scale * ...) rescaled about a point: returns the interface of
  /// the blow-up x -> (x - p) / r.
  InterfaceSpec rescaled(Point2 p, double r) const {
    if (straight && p.y == 0.0) return *this;
    auto f = psi, f1 = dpsi, f2 = d2psi, f3 = d3psi;
    return graph(
        name + "@rescaled", [=](double x) { return (f(p.x + r * x) - p.y) / r; }, [=](double x) { return f1(p.x + r * x); },
        [=](double x) { return r * f2(p.x + r * x); }, [=](double x) { return r * r * f3(p.x + r * x); });
  }
};

enum class NodeTag : std::uint8_t { InteriorPlus, InteriorMinus, Interface, OuterPlus, OuterMinus };

inline const char* tag_name(NodeTag t) {
  switch (t) {
    case NodeTag::InteriorPlus: return "interior+";
    case NodeTag::InteriorMinus: return "interior-";
    case NodeTag::Interface: return "interface";
    case NodeTag::OuterPlus: return "outer+";
    case NodeTag::OuterMinus: return "outer-";
  }
  return "?";
}

enum class Side : std::uint8_t { Plus, Minus, Both };

/// Neighbour directions, in this order: +x, -x, +y, -y.
inline constexpr std::array<std::array<int, 2>, 4> kNeighbourOffsets{{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};

struct DomainOptions {
  double transversality_deg = 30.0;
};

class HalfDomain {
 public:
  double radius() const { return radius_; }
  double spacing() const { return h_; }
  const InterfaceSpec& interface() const { return iface_; }
  int half_width() const { return m_; }
  std::size_t size() const { return x_.size(); }

  Point2 node(std::size_t id) const { return {x_[id], y_[id]}; }
  int grid_i(std::size_t id) const { return gi_[id]; }
  int grid_j(std::size_t id) const { return gj_[id]; }
  NodeTag tag(std::size_t id) const { return tag_[id]; }
  /// Interface node with a grid neighbour outside the disk.
  bool on_rim(std::size_t id) const { return rim_[id] != 0; }

  /// Neighbour in direction k (see kNeighbourOffsets), or -1 outside the disk.
  long neighbour(std::size_t id, int k) const { return nb_[id][static_cast<std::size_t>(k)]; }

  /// Node id at grid coordinates (i, j), or -1.
  long at(int i, int j) const {
    if (i < -m_ || i > m_ || j < -m_ || j > m_) return -1;
    return index_[static_cast<std::size_t>((j + m_) * (2 * m_ + 1) + (i + m_))];
  }

  /// Whether node `id` carries values of side s.
  bool on_side(std::size_t id, Side s) const {
    switch (s) {
      case Side::Plus: return tag_[id] == NodeTag::InteriorPlus || tag_[id] == NodeTag::OuterPlus || tag_[id] == NodeTag::Interface;
      case Side::Minus:
        return tag_[id] == NodeTag::InteriorMinus || tag_[id] == NodeTag::OuterMinus || tag_[id] == NodeTag::Interface;
      case Side::Both: return true;
    }
    return false;
  }

  /// Continuous membership: inside the closed disk and on the given side of gamma.
  bool contains(Point2 p, Side s) const {
    if (p.x * p.x + p.y * p.y > radius_ * radius_) return false;
    if (s == Side::Both) return true;
    const double v = p.y - iface_.psi(p.x);
    return s == Side::Plus ? v >= 0.0 : v <= 0.0;
  }

  /// Angles (degrees) between gamma and the circle at the two crossings.
  std::pair<double, double> crossing_angles() const { return angles_; }
  std::pair<Point2, Point2> crossings() const { return crossings_; }

  std::size_t count(NodeTag t) const {
    std::size_t c = 0;
    for (auto v : tag_)
      if (v == t) ++c;
    return c;
  }

  friend std::shared_ptr<const HalfDomain> build_halfdisk(double, InterfaceSpec, double, DomainOptions);

 private:
  double radius_ = 1.0;
  double h_ = 1.0 / 64;
  int m_ = 0;
  InterfaceSpec iface_;
  std::vector<double> x_, y_;
  std::vector<int> gi_, gj_;
  std::vector<NodeTag> tag_;
  std::vector<std::uint8_t> rim_;
  std::vector<std::array<long, 4>> nb_;
  std::vector<long> index_;
  std::pair<double, double> angles_{90.0, 90.0};
  std::pair<Point2, Point2> crossings_;
};

namespace detail {

// First crossing of gamma with the circle when walking from x = 0 in direction dir.
inline Point2 circle_crossing(const InterfaceSpec& s, double radius, double dir, double step) {
  auto f = [&](double x) {
    const double y = s.psi(x);
    return x * x + y * y - radius * radius;
  };
  double a = 0.0;
  double b = 0.0;
  for (;;) {
    b = a + dir * step;
    if (f(b) >= 0.0) break;
    a = b;
    if (std::abs(a) > radius) throw ConstructionError("interface: no crossing with the outer circle found");
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (a + b);
    if (f(mid) >= 0.0)
      b = mid;
    else
      a = mid;
  }
  const double x = 0.5 * (a + b);
  return {x, s.psi(x)};
}

inline double crossing_angle_deg(const InterfaceSpec& s, Point2 p) {
  const double tx = 1.0, ty = s.dpsi(p.x);
  const double cx = -p.y, cy = p.x;  // circle tangent
  const double c = std::abs(tx * cx + ty * cy) / (std::hypot(tx, ty) * std::hypot(cx, cy));
  return std::acos(std::min(1.0, c)) * 180.0 / std::numbers::pi;
}

}  // namespace detail

/// Tagged grid on the disk of radius R split by `iface`.
inline std::shared_ptr<const HalfDomain> build_halfdisk(double radius, InterfaceSpec iface, double h,
                                                        DomainOptions opts = {}) {
  if (!(radius > 0.0)) throw DomainError("build_halfdisk: radius must be positive");
  if (!(h > 0.0) || !(h < radius / 8.0)) throw DomainError("build_halfdisk: need 0 < h < R/8");
  if (!iface.straight && std::abs(iface.psi(0.0)) > 1e-14)
    throw ConstructionError("build_halfdisk: interface must pass through the origin");

  auto dom = std::make_shared<HalfDomain>();
  dom->radius_ = radius;
  dom->h_ = h;
  dom->iface_ = std::move(iface);

  // Transversality at both crossings with the circle.
  const Point2 right = detail::circle_crossing(dom->iface_, radius, +1.0, h / 8.0);
  const Point2 left = detail::circle_crossing(dom->iface_, radius, -1.0, h / 8.0);
  dom->crossings_ = {left, right};
  dom->angles_ = {detail::crossing_angle_deg(dom->iface_, left), detail::crossing_angle_deg(dom->iface_, right)};
  if (dom->angles_.first < opts.transversality_deg || dom->angles_.second < opts.transversality_deg)
    throw ConstructionError("build_halfdisk: interface meets the outer circle at " +
                            std::to_string(std::min(dom->angles_.first, dom->angles_.second)) +
                            " degrees, below the transversality threshold of " +
                            std::to_string(opts.transversality_deg));

  const int m = static_cast<int>(std::ceil(radius / h));
  dom->m_ = m;
  const std::size_t width = static_cast<std::size_t>(2 * m + 1);
  dom->index_.assign(width * width, -1);
  const double r2 = radius * radius * (1.0 + 1e-12);
  auto inside = [&](int i, int j) {
    const double x = i * h, y = j * h;
    return x * x + y * y <= r2;
  };
  for (int j = -m; j <= m; ++j) {
    for (int i = -m; i <= m; ++i) {
      if (!inside(i, j)) continue;
      dom->index_[static_cast<std::size_t>((j + m) * (2 * m + 1) + (i + m))] = static_cast<long>(dom->x_.size());
      dom->x_.push_back(i * h);
      dom->y_.push_back(j * h);
      dom->gi_.push_back(i);
      dom->gj_.push_back(j);
    }
  }
  const std::size_t n = dom->x_.size();
  dom->nb_.resize(n);
  dom->tag_.resize(n);
  dom->rim_.assign(n, 0);
  for (std::size_t id = 0; id < n; ++id) {
    bool boundary = false;
    for (int k = 0; k < 4; ++k) {
      const long nbr = dom->at(dom->gi_[id] + kNeighbourOffsets[k][0], dom->gj_[id] + kNeighbourOffsets[k][1]);
      dom->nb_[id][static_cast<std::size_t>(k)] = nbr;
      if (nbr < 0) boundary = true;
    }
    const double side = dom->y_[id] - dom->iface_.psi(dom->x_[id]);
    if (side > -0.5 * h && side <= 0.5 * h) {
      dom->tag_[id] = NodeTag::Interface;
      dom->rim_[id] = boundary ? 1 : 0;
    } else if (side > 0.0) {
      dom->tag_[id] = boundary ? NodeTag::OuterPlus : NodeTag::InteriorPlus;
    } else {
      dom->tag_[id] = boundary ? NodeTag::OuterMinus : NodeTag::InteriorMinus;
    }
  }
  // The two open sides may only meet through interface nodes.
  for (std::size_t id = 0; id < n; ++id) {
    if (dom->tag_[id] == NodeTag::Interface) continue;
    const bool plus = dom->on_side(id, Side::Plus);
    for (int k = 0; k < 4; ++k) {
      const long nbr = dom->nb_[id][static_cast<std::size_t>(k)];
      if (nbr < 0 || dom->tag_[static_cast<std::size_t>(nbr)] == NodeTag::Interface) continue;
      if (dom->on_side(static_cast<std::size_t>(nbr), Side::Plus) != plus)
        throw ConstructionError("build_halfdisk: interface too steep for spacing h (Omega+ and Omega- nodes adjacent)");
    }
  }
  return dom;
}

}  // namespace qhalf
