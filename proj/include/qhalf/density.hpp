#pragma once

// Mass ratios ||T||(B_r(p)) / (pi r^2) for the branched surface z -> (z^3, g(z))
// over a half-stadium D, and for two concentric flat disks.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <unordered_map>
#include <vector>

#include "qhalf/errors.hpp"
#include "qhalf/frequency.hpp"
#include "qhalf/holo.hpp"

namespace qhalf::holo {

using C2 = std::array<cplx, 2>;

inline double norm2(const C2& v) { return std::norm(v[0]) + std::norm(v[1]); }
inline double dist(const C2& a, const C2& b) { return std::sqrt(std::norm(a[0] - b[0]) + std::norm(a[1] - b[1])); }

/// D = {Re z >= 0, dist(z, [-tau0 i, tau0 i]) <= rho}: a half-stadium whose
/// boundary gamma contains sigma = [-tau i, tau i], tau = tau0 + rho.
struct BranchedSurface {
  double alpha = 0.5;
  double tau0 = 0.05;
  double rho = 1.2;

  double tau() const { return tau0 + rho; }

  void validate() const {
    check_alpha(alpha);
    if (!(tau0 >= 0.0 && rho > 0.0)) throw DomainError("BranchedSurface: need tau0 >= 0 and rho > 0");
  }

  /// Signed distance to the boundary of D (negative inside).
  double sdf(cplx z) const {
    const double y = std::clamp(z.imag(), -tau0, tau0);
    const double round = std::hypot(z.real(), z.imag() - y) - rho;
    return std::max(-z.real(), round);
  }
  std::array<double, 2> sdf_grad(cplx z) const {
    const double y = std::clamp(z.imag(), -tau0, tau0);
    const double dx = z.real(), dy = z.imag() - y, len = std::hypot(dx, dy);
    if (-z.real() >= len - rho || len == 0.0) return {-1.0, 0.0};
    return {dx / len, dy / len};
  }
  bool contains(cplx z) const { return sdf(z) <= 0.0; }

  C2 G(cplx z) const { return {z * z * z, g_product(z, alpha)}; }
  C2 dG(cplx z) const {
    if (z == cplx(0.0)) return {0.0, 0.0};
    return {3.0 * z * z, g_derivative(z, alpha)};
  }
  /// Area element of the parametrization, |G'(z)|^2.
  double jacobian(cplx z) const { return norm2(dG(z)); }

  /// sqrt det(D^T D) of the real 4x2 differential, by central differences.
  double jacobian_real(cplx z, double e = 1e-6) const {
    const C2 a = G(z + e), b = G(z - e), c = G(z + cplx(0, e)), d = G(z - cplx(0, e));
    std::array<double, 4> u{}, v{};
    for (int j = 0; j < 2; ++j) {
      const cplx du = (a[j] - b[j]) / (2 * e), dv = (c[j] - d[j]) / (2 * e);
      u[2 * j] = du.real();
      u[2 * j + 1] = du.imag();
      v[2 * j] = dv.real();
      v[2 * j + 1] = dv.imag();
    }
    double uu = 0, vv = 0, uv = 0;
    for (int k = 0; k < 4; ++k) {
      uu += u[k] * u[k];
      vv += v[k] * v[k];
      uv += u[k] * v[k];
    }
    return std::sqrt(std::max(0.0, uu * vv - uv * uv));
  }

  /// Point of gamma at arclength fraction t in [0, 1): sigma from -tau i up to
  /// tau i, then the rounded part back down.
  cplx gamma(double t) const {
    const double ls = 2 * tau(), la = 0.5 * holo::kPi * rho, lv = 2 * tau0;
    const double total = ls + 2 * la + lv;
    double s = (t - std::floor(t)) * total;
    if (s < ls) return {0.0, -tau() + s};
    s -= ls;
    if (s < la) return cplx(0.0, tau0) + std::polar(rho, holo::kPi / 2 - s / rho);
    s -= la;
    if (s < lv) return {rho, tau0 - s};
    s -= lv;
    return cplx(0.0, -tau0) + std::polar(rho, -s / rho);
  }
  double gamma_length() const { return 2 * tau() + holo::kPi * rho + 2 * tau0; }
};

struct DensityReport {
  C2 p{};
  std::vector<double> radii, mass, ratio;
  double limit = 0.0;  // Richardson extrapolation in r of the two smallest radii
  int leaves = 0;
};

namespace detail {

struct MassIntegrator {
  const BranchedSurface& S;
  C2 p;
  double r;
  double resolution;  // leaf size: |G'| * half-diagonal <= r / resolution
  int max_depth = 40;
  double mass = 0.0;
  int leaves = 0;

  void cell(double x0, double x1, double y0, double y1, int depth) {
    const double w = x1 - x0, h = y1 - y0;
    const cplx c(0.5 * (x0 + x1), 0.5 * (y0 + y1));
    const double half = 0.5 * std::hypot(w, h);
    const double sd = S.sdf(c);
    if (sd > half) return;
    const C2 Gc = S.G(c), Dc = S.dG(c);
    const double L = std::sqrt(norm2(Dc));
    const double dc = dist(Gc, p);
    // Lipschitz slack: three times the centre slope plus a term for cells
    // around the origin where the slope itself is small.
    const double lip = 3.0 * L + 3.0 * (std::abs(c) + half) * half * 6.0;
    if (dc - lip * half > r) return;
    if (depth < 3) return split(x0, x1, y0, y1, depth);
    if (dc + lip * half < r && sd < -half) {
      // Whole cell inside: 2x2 Gauss.
      const double g = 0.5 / std::sqrt(3.0);
      double s = 0.0;
      for (double a : {-g, g})
        for (double b : {-g, g}) s += S.jacobian(c + cplx(a * w, b * h));
      mass += 0.25 * s * w * h;
      return;
    }
    if (L * half > r / resolution || depth < 6) {
      if (depth >= max_depth) throw ResolutionError("density: radius below attainable resolution");
      return split(x0, x1, y0, y1, depth);
    }
    // Leaf: the ball and the domain boundary are linear across the cell.
    ++leaves;
    double f_ball = 1.0;
    if (dc > 0.0) {
      double gx = 0.0, gy = 0.0;
      for (int j = 0; j < 2; ++j) {
        const cplx u = std::conj(Gc[j] - p[j]) / dc;
        gx += (u * Dc[j]).real();
        gy += (u * cplx(0, 1) * Dc[j]).real();
      }
      double a = std::abs(gx) * w, b = std::abs(gy) * h;
      if (a < b) std::swap(a, b);
      f_ball = a > 0.0 ? qhalf::detail::cell_cdf(a, b, r - dc) : (dc <= r ? 1.0 : 0.0);
    }
    double f_dom = 1.0;
    if (sd > -half) {
      const auto g = S.sdf_grad(c);
      double a = std::abs(g[0]) * w, b = std::abs(g[1]) * h;
      if (a < b) std::swap(a, b);
      f_dom = qhalf::detail::cell_cdf(a, b, -sd);
    }
    mass += w * h * norm2(Dc) * f_ball * f_dom;
  }

  void split(double x0, double x1, double y0, double y1, int depth) {
    const double xm = 0.5 * (x0 + x1), ym = 0.5 * (y0 + y1);
    cell(x0, xm, y0, ym, depth + 1);
    cell(xm, x1, y0, ym, depth + 1);
    cell(x0, xm, ym, y1, depth + 1);
    cell(xm, x1, ym, y1, depth + 1);
  }
};

inline double surface_mass(const BranchedSurface& S, const C2& p, double r, double resolution, int& leaves) {
  MassIntegrator mi{S, p, r, resolution};
  const double ext = std::max(S.rho, 2 * S.tau());
  mi.cell(0.0, ext, -0.5 * ext, 0.5 * ext, 0);
  leaves += mi.leaves;
  return mi.mass;
}

}  // namespace detail

/// Mass ratio per radius. Each mass is the Richardson combination of two leaf
/// resolutions (second order), and the limit extrapolates linearly in r from
/// the two smallest radii, which must differ by a factor 2.
inline DensityReport density_at(const BranchedSurface& S, const C2& p, std::vector<double> radii,
                                double resolution = 24.0) {
  S.validate();
  if (radii.size() < 2) throw DomainError("density_at: need at least two radii");
  std::sort(radii.begin(), radii.end(), std::greater<>());
  for (double r : radii)
    if (!(r > 0.0)) throw DomainError("density_at: radii must be positive");
  DensityReport rep;
  rep.p = p;
  for (double r : radii) {
    if (r < 1e-6) throw ResolutionError("density_at: radius below attainable resolution");
    const double m1 = detail::surface_mass(S, p, r, resolution, rep.leaves);
    const double m2 = detail::surface_mass(S, p, r, 2 * resolution, rep.leaves);
    const double m = (4 * m2 - m1) / 3;
    rep.radii.push_back(r);
    rep.mass.push_back(m);
    rep.ratio.push_back(m / (holo::kPi * r * r));
  }
  const std::size_t n = rep.radii.size();
  const double r1 = rep.radii[n - 2], r0 = rep.radii[n - 1];
  rep.limit = (r1 * rep.ratio[n - 1] - r0 * rep.ratio[n - 2]) / (r1 - r0);
  return rep;
}

// ---------------------------------------------------------------------------


struct CollisionScan {
  double max_step = 0.0;        // largest distance between consecutive samples
  double min_separation = std::numeric_limits<double>::infinity();  // over pairs far apart along the curve
  std::size_t closest_i = 0, closest_j = 0;
  bool injective = true;        // no pair closer than the chords at either end allow
};

/// Near-collision scan of a closed sampled curve in R^4 with a spatial hash.
/// Two samples closer than their adjacent chords but far apart along the
/// curve signal a crossing. Distance along the curve, not sample count: G' = 0
/// at the origin packs samples there.
inline CollisionScan scan_collisions(const std::vector<C2>& pts, double tol) {
  CollisionScan out;
  const std::size_t samples = pts.size();
  std::vector<double> arc(samples + 1, 0.0);
  for (std::size_t i = 0; i < samples; ++i) {
    const double d = dist(pts[i], pts[(i + 1) % samples]);
    arc[i + 1] = arc[i] + d;
    out.max_step = std::max(out.max_step, d);
  }
  const double thr = std::max(tol, 2.0 * out.max_step);
  std::vector<double> step(samples);
  for (std::size_t i = 0; i < samples; ++i)
    step[i] = std::max(arc[i + 1] - arc[i], i > 0 ? arc[i] - arc[i - 1] : arc[samples] - arc[samples - 1]);
  using Key = std::array<long long, 4>;
  struct KeyHash {
    std::size_t operator()(const Key& k) const {
      std::size_t h = 1469598103934665603ull;
      for (long long v : k) h = (h ^ static_cast<std::size_t>(v)) * 1099511628211ull;
      return h;
    }
  };
  std::unordered_map<Key, std::vector<std::size_t>, KeyHash> grid;
  auto key = [&](const C2& q) {
    return Key{static_cast<long long>(std::floor(q[0].real() / thr)), static_cast<long long>(std::floor(q[0].imag() / thr)),
               static_cast<long long>(std::floor(q[1].real() / thr)), static_cast<long long>(std::floor(q[1].imag() / thr))};
  };
  for (std::size_t i = 0; i < samples; ++i) grid[key(pts[i])].push_back(i);
  for (std::size_t i = 0; i < samples; ++i) {
    const Key k = key(pts[i]);
    for (int a = -1; a <= 1; ++a)
      for (int b = -1; b <= 1; ++b)
        for (int c = -1; c <= 1; ++c)
          for (int d = -1; d <= 1; ++d) {
            auto it = grid.find({k[0] + a, k[1] + b, k[2] + c, k[3] + d});
            if (it == grid.end()) continue;
            for (std::size_t j : it->second) {
              if (j <= i) continue;
              const double local = std::max(tol, step[i] + step[j]);
              const double along = std::min(arc[j] - arc[i], arc[samples] - (arc[j] - arc[i]));
              if (along <= 2.0 * local) continue;
              const double dd = dist(pts[i], pts[j]);
              if (dd < local) out.injective = false;
              if (dd < out.min_separation) {
                out.min_separation = dd;
                out.closest_i = i;
                out.closest_j = j;
              }
            }
          }
  }
  return out;
}

struct CurveReport {
  std::vector<double> t;
  std::vector<cplx> z;
  std::vector<C2> points;
  CollisionScan scan;
  struct DoublePoint {
    int n = 0;
    int sign = 0;                 // p = (sign i e^{3 n pi}, 0)
    cplx z1, z2;                  // preimage on sigma, interior preimage
    int preimages = 0;
    double rotation_error = 0.0;  // |z2 - e^{2 pi i / 3} z1| / |z1|
    double image_gap = 0.0;       // |G(z1) - G(z2)|
    bool ok = false;
  };
  std::vector<DoublePoint> double_points;
};

/// Samples Gamma = G(gamma), scans for near-collisions with a spatial hash in
/// R^4, and certifies the double points p = (+-i e^{3 n pi}, 0) with z1 on sigma.
inline CurveReport boundary_curve(const BranchedSurface& S, std::size_t samples = 20000, double tol = 1e-8,
                                  int n_min = -3) {
  S.validate();
  if (samples < 100) throw DomainError("boundary_curve: too few samples");
  CurveReport rep;
  for (std::size_t i = 0; i < samples; ++i) {
    const double t = static_cast<double>(i) / samples;
    rep.t.push_back(t);
    rep.z.push_back(S.gamma(t));
    rep.points.push_back(S.G(rep.z.back()));
  }
  rep.scan = scan_collisions(rep.points, tol);


  const cplx rot = std::polar(1.0, 2 * holo::kPi / 3);
  for (int n = n_min; std::exp(n * holo::kPi) <= S.tau(); ++n)
    for (int sign : {1, -1}) {
      CurveReport::DoublePoint dp;
      dp.n = n;
      dp.sign = sign;
      const C2 p{cplx(0.0, sign * std::exp(3 * n * holo::kPi)), 0.0};
      // Preimages: cube roots of p_1 inside D on which g vanishes.
      std::vector<cplx> pre;
      for (int j = 0; j < 3; ++j) {
        const cplx z = std::polar(std::exp(n * holo::kPi), (sign * holo::kPi / 2 + 2 * holo::kPi * j) / 3);
        if (S.sdf(z) > 1e-12) continue;
        if (std::abs(g_product(z, S.alpha)) > 1e-10) continue;
        pre.push_back(z);
      }
      dp.preimages = static_cast<int>(pre.size());
      for (cplx z : pre) {
        if (std::abs(z.real()) <= 1e-12 * std::abs(z)) dp.z1 = cplx(0.0, z.imag());
        else dp.z2 = z;
      }
      const double m = std::exp(n * holo::kPi);
      dp.rotation_error = std::abs((sign > 0 ? dp.z2 : dp.z1) - rot * (sign > 0 ? dp.z1 : dp.z2)) / m;
      dp.image_gap = dist(S.G(dp.z1), S.G(dp.z2));
      dp.ok = dp.preimages == 2 && dp.z1 != cplx(0.0) && dp.z2 != cplx(0.0) && S.sdf(dp.z2) < 0.0 &&
              dp.rotation_error <= 1e-12 && dp.image_gap <= 1e-10 * std::max(1.0, std::sqrt(norm2(p)));
      rep.double_points.push_back(dp);
    }
  return rep;
}

// ---------------------------------------------------------------------------
// Two concentric flat disks of radii R1 < R2 in one plane.

/// Area of the intersection of a disk of radius R centred at the origin with
/// a disk of radius r centred at distance d.
inline double lens_area(double d, double R, double r) {
  if (d >= R + r) return 0.0;
  if (d <= std::abs(R - r)) return holo::kPi * std::min(R, r) * std::min(R, r);
  const double a = std::acos(std::clamp((d * d + r * r - R * R) / (2 * d * r), -1.0, 1.0));
  const double b = std::acos(std::clamp((d * d + R * R - r * r) / (2 * d * R), -1.0, 1.0));
  const double k = std::sqrt(std::max(0.0, (-d + r + R) * (d + r - R) * (d - r + R) * (d + r + R)));
  return r * r * a + R * R * b - 0.5 * k;
}

inline double two_circles_ratio(double R1, double R2, double d, double r) {
  return (lens_area(d, R1, r) + lens_area(d, R2, r)) / (holo::kPi * r * r);
}

/// Independent check of a disk-ball intersection area: midpoint rule on an
/// n x n grid over the ball's bounding square.
inline double lens_area_numeric(double d, double R, double r, int n = 1000) {
  const double hcell = 2 * r / n;
  double s = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double x = d - r + (i + 0.5) * hcell, y = -r + (j + 0.5) * hcell;
      if ((x - d) * (x - d) + y * y <= r * r && x * x + y * y <= R * R) s += 1.0;
    }
  return s * hcell * hcell;
}

struct TwoCirclesReport {
  double R1 = 0.0, R2 = 0.0, d = 0.0;
  std::vector<double> radii, exact, numeric;
  double limit = 0.0;        // Richardson in r from the two smallest radii
  double expected = 0.0;     // 2 inside, 3/2 on the inner circle, 1 between, 1/2 on the outer circle
  double max_numeric_gap = 0.0;
};

inline TwoCirclesReport two_circles_density(double R1, double R2, double d, std::vector<double> radii = {}) {
  if (!(R1 > 0.0 && R2 > R1)) throw DomainError("two circles: need 0 < R1 < R2");
  if (!(d >= 0.0)) throw DomainError("two circles: distance must be >= 0");
  if (radii.empty())
    for (double f : {0.1, 0.05, 0.025, 0.0125}) radii.push_back(f * R1);
  std::sort(radii.begin(), radii.end(), std::greater<>());
  TwoCirclesReport rep;
  rep.R1 = R1;
  rep.R2 = R2;
  rep.d = d;
  auto sheet = [](double d, double R) { return d < R ? 1.0 : d == R ? 0.5 : 0.0; };
  rep.expected = sheet(d, R1) + sheet(d, R2);
  for (double r : radii) {
    rep.radii.push_back(r);
    rep.exact.push_back(two_circles_ratio(R1, R2, d, r));
    const double num = (lens_area_numeric(d, R1, r) + lens_area_numeric(d, R2, r)) / (holo::kPi * r * r);
    rep.numeric.push_back(num);
    rep.max_numeric_gap = std::max(rep.max_numeric_gap, std::abs(num - rep.exact.back()));
  }
  const std::size_t n = rep.radii.size();
  const double r1 = rep.radii[n - 2], r0 = rep.radii[n - 1];
  rep.limit = (r1 * rep.exact[n - 1] - r0 * rep.exact[n - 2]) / (r1 - r0);
  return rep;
}

}  // namespace qhalf::holo
