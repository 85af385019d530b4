#pragma once

// f_k(z) = exp(-z^{-alpha}) sin(Log z + (3 - 2k) pi i / 6), g = f_0 f_1 f_2 f_3,
// on the closed right half-plane and its extension to the slit plane.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <vector>

#include "qhalf/errors.hpp"

namespace qhalf::holo {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;

inline void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
}

/// Principal log; the negative real axis is outside the extension domain.
inline cplx log_z(cplx z) {
  if (z.imag() == 0.0 && z.real() < 0.0) throw DomainError("z on the negative real axis");
  return std::log(z);
}

inline double phase(int k) { return (3.0 - 2.0 * k) * kPi / 6.0; }

inline cplx f_k(cplx z, int k, double alpha = 0.5) {
  check_alpha(alpha);
  if (k < 0 || k > 3) throw DomainError("k must be 0..3");
  if (z == cplx(0.0)) return 0.0;
  const cplx l = log_z(z);
  return std::exp(-std::exp(-alpha * l)) * std::sin(l + cplx(0.0, phase(k)));
}

inline cplx g_product(cplx z, double alpha = 0.5) {
  check_alpha(alpha);
  if (z == cplx(0.0)) return 0.0;
  const cplx l = log_z(z);
  cplx s = std::exp(-4.0 * std::exp(-alpha * l));
  for (int k = 0; k < 4; ++k) s *= std::sin(l + cplx(0.0, phase(k)));
  return s;
}

/// g'(z) / g(z).
inline cplx g_log_derivative(cplx z, double alpha = 0.5) {
  const cplx l = log_z(z);
  cplx s = 4.0 * alpha * std::exp(-(alpha + 1.0) * l);
  for (int k = 0; k < 4; ++k) {
    const cplx w = l + cplx(0.0, phase(k));
    s += std::cos(w) / std::sin(w) / z;
  }
  return s;
}

inline cplx g_derivative(cplx z, double alpha = 0.5) {
  check_alpha(alpha);
  if (z == cplx(0.0)) return 0.0;
  const cplx l = log_z(z);
  const cplx e = std::exp(-4.0 * std::exp(-alpha * l));
  std::array<cplx, 4> s;
  for (int k = 0; k < 4; ++k) s[k] = std::sin(l + cplx(0.0, phase(k)));
  cplx sum = 4.0 * alpha * std::exp(-(alpha + 1.0) * l) * s[0] * s[1] * s[2] * s[3];
  for (int k = 0; k < 4; ++k) {
    cplx term = std::cos(l + cplx(0.0, phase(k))) / z;
    for (int j = 0; j < 4; ++j)
      if (j != k) term *= s[j];
    sum += term;
  }
  return e * sum;
}

/// exp(n pi + i (2k - 3) pi / 6).
inline std::vector<cplx> predicted_zero_set(int k, int n_min, int n_max) {
  if (k < 0 || k > 3) throw DomainError("k must be 0..3");
  std::vector<cplx> out;
  for (int n = n_min; n <= n_max; ++n) out.push_back(std::polar(std::exp(n * kPi), (2.0 * k - 3.0) * kPi / 6.0));
  return out;
}

/// All predicted zeros with r1 <= |z| <= r2.
inline std::vector<cplx> predicted_zeros_in_annulus(double r1, double r2) {
  std::vector<cplx> out;
  const int lo = static_cast<int>(std::floor(std::log(r1) / kPi)) - 1;
  const int hi = static_cast<int>(std::ceil(std::log(r2) / kPi)) + 1;
  for (int k = 0; k < 4; ++k)
    for (cplx z : predicted_zero_set(k, lo, hi))
      if (std::abs(z) >= r1 && std::abs(z) <= r2) out.push_back(z);
  return out;
}

struct ZeroReport {
  std::vector<cplx> found;
  std::vector<cplx> predicted;
  std::vector<double> match_error;  // per predicted zero
  double max_error = 0.0;
  int cells_searched = 0;
};

namespace detail {

inline double wrap(double a) {
  while (a > kPi) a -= 2 * kPi;
  while (a <= -kPi) a += 2 * kPi;
  return a;
}

// Continuous change of arg g between two nearby points, from the factored
// form so it stays meaningful where |g| underflows.
inline double arg_step(cplx a, cplx b, double alpha, bool& ok) {
  const cplx la = log_z(a), lb = log_z(b);
  double d = -4.0 * (std::exp(-alpha * lb).imag() - std::exp(-alpha * la).imag());
  ok = std::abs(d) < 0.5;
  for (int k = 0; k < 4; ++k) {
    const double s = wrap(std::arg(std::sin(lb + cplx(0.0, phase(k)))) - std::arg(std::sin(la + cplx(0.0, phase(k)))));
    ok = ok && std::abs(s) < 0.5;
    d += s;
  }
  return d;
}

inline double edge_winding(cplx a, cplx b, double alpha, int depth = 0) {
  bool ok = false;
  const double d = arg_step(a, b, alpha, ok);
  if (ok || depth > 40) return d;
  const cplx m = 0.5 * (a + b);
  return edge_winding(a, m, alpha, depth + 1) + edge_winding(m, b, alpha, depth + 1);
}

// Polar cell [rho0, rho1] x [th0, th1] in (log r, arg) coordinates.
struct Cell {
  double rho0, rho1, th0, th1;
};

inline cplx polar_point(double rho, double th) { return std::polar(std::exp(rho), th); }

inline double cell_winding(const Cell& c, double alpha) {
  // Radial edges are straight; arcs are split into short chords.
  const int arc_steps = 16;
  double total = 0.0;
  auto arc = [&](double rho, double t0, double t1) {
    for (int j = 0; j < arc_steps; ++j) {
      const double a = t0 + (t1 - t0) * j / arc_steps, b = t0 + (t1 - t0) * (j + 1) / arc_steps;
      total += edge_winding(polar_point(rho, a), polar_point(rho, b), alpha);
    }
  };
  arc(c.rho0, c.th0, c.th1);
  total += edge_winding(polar_point(c.rho0, c.th1), polar_point(c.rho1, c.th1), alpha);
  arc(c.rho1, c.th1, c.th0);
  total += edge_winding(polar_point(c.rho1, c.th0), polar_point(c.rho0, c.th0), alpha);
  return -total / (2 * kPi);  // the loop above runs clockwise in z
}

inline bool newton(cplx& z, double alpha) {
  for (int it = 0; it < 100; ++it) {
    const cplx step = 1.0 / g_log_derivative(z, alpha);
    z -= step;
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
    if (std::abs(step) <= 1e-15 * std::abs(z)) return true;
  }
  return false;
}

inline void search_cell(const Cell& c, double alpha, int depth, ZeroReport& rep) {
  ++rep.cells_searched;
  const double w = cell_winding(c, alpha);
  const int count = static_cast<int>(std::lround(w));
  if (std::abs(w - count) > 0.05) throw DiscrepancyError("find_zeros: non-integer winding " + std::to_string(w));
  if (count == 0) return;
  if (count == 1) {
    cplx z = polar_point(0.5 * (c.rho0 + c.rho1), 0.5 * (c.th0 + c.th1));
    if (newton(z, alpha)) {
      const double rho = std::log(std::abs(z)), th = std::arg(z);
      const double m = 1e-12;
      if (rho >= c.rho0 - m && rho <= c.rho1 + m && th >= c.th0 - m && th <= c.th1 + m) {
        rep.found.push_back(z);
        return;
      }
    }
  }
  if (depth > 30) throw DiscrepancyError("find_zeros: could not isolate zeros");
  const double rm = 0.5 * (c.rho0 + c.rho1), tm = 0.5 * (c.th0 + c.th1);
  for (const Cell& s : {Cell{c.rho0, rm, c.th0, tm}, Cell{rm, c.rho1, c.th0, tm}, Cell{c.rho0, rm, tm, c.th1},
                        Cell{rm, c.rho1, tm, c.th1}})
    search_cell(s, alpha, depth + 1, rep);
}

}  // namespace detail

/// Zeros of g with r1 <= |z| <= r2 in the closed right half-plane, found by
/// winding numbers on polar cells and polished by Newton, then matched one to
/// one with the closed-form set. Throws DiscrepancyError on any mismatch.
inline ZeroReport find_zeros_numeric(double r1, double r2, double alpha = 0.5, double match_tol = 1e-10) {
  check_alpha(alpha);
  if (!(r1 > 0.0 && r2 > r1)) throw DomainError("find_zeros: need 0 < r1 < r2");
  ZeroReport rep;
  // Search a slightly larger polar box so zeros on the imaginary axis or on
  // the annulus edges sit strictly inside; cell edges avoid the zero rays.
  const double pad = 0.1;
  const double th0 = -kPi / 2 - pad, th1 = kPi / 2 + pad;
  const int nth = 13;
  const double rho0 = std::log(r1) - 0.013, rho1 = std::log(r2) + 0.017;
  const int nrho = std::max(1, static_cast<int>(std::ceil((rho1 - rho0) / 0.25)));
  for (int a = 0; a < nrho; ++a)
    for (int b = 0; b < nth; ++b)
      detail::search_cell({rho0 + (rho1 - rho0) * a / nrho, rho0 + (rho1 - rho0) * (a + 1) / nrho,
                           th0 + (th1 - th0) * b / nth, th0 + (th1 - th0) * (b + 1) / nth},
                          alpha, 0, rep);
  std::vector<cplx> kept;
  for (cplx z : rep.found) {
    const double r = std::abs(z);
    if (r >= r1 * (1 - 1e-12) && r <= r2 * (1 + 1e-12) && z.real() >= -1e-12 * r) kept.push_back(z);
  }
  std::sort(kept.begin(), kept.end(), [](cplx a, cplx b) {
    return std::abs(a) != std::abs(b) ? std::abs(a) < std::abs(b) : std::arg(a) < std::arg(b);
  });
  rep.found = kept;
  rep.predicted = predicted_zeros_in_annulus(r1, r2);
  std::vector<char> used(rep.found.size(), 0);
  for (cplx p : rep.predicted) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t pick = 0;
    for (std::size_t j = 0; j < rep.found.size(); ++j) {
      const double e = std::abs(rep.found[j] - p) / std::max(1.0, std::abs(p));
      if (!used[j] && e < best) {
        best = e;
        pick = j;
      }
    }
    rep.match_error.push_back(best);
    rep.max_error = std::max(rep.max_error, best);
    if (best > match_tol)
      throw DiscrepancyError("find_zeros: predicted zero " + std::to_string(p.real()) + "+" + std::to_string(p.imag()) +
                             "i not found");
    used[pick] = 1;
  }
  for (std::size_t j = 0; j < used.size(); ++j)
    if (!used[j])
      throw DiscrepancyError("find_zeros: unpredicted zero at " + std::to_string(rep.found[j].real()) + "+" +
                             std::to_string(rep.found[j].imag()) + "i");
  return rep;
}

// ---------------------------------------------------------------------------
// h(s) = g(i s^{1/3}) and its derivatives.
//
// With t = log s, h = exp(A(t)) S(t) where A = -4 exp(-alpha (t/3 + i pi/2))
// and S is the product of the four sines, a trigonometric polynomial in t/3.
// t-derivatives follow from the Bell polynomials of A' = a A, A'' = a^2 A, ...
// (a = -alpha/3) and s^l d^l/ds^l = sum_j s(l, j) d^j/dt^j with signed Stirling
// numbers of the first kind. Magnitudes are carried as logs.

namespace detail {

inline cplx A_of(double t, double alpha) { return -4.0 * std::exp(-alpha * cplx(t / 3.0, kPi / 2.0)); }

inline cplx S_derivative(double t, int j) {
  const std::array<double, 4> beta{kPi / 2 + phase(0), kPi / 2 + phase(1), kPi / 2 + phase(2), kPi / 2 + phase(3)};
  cplx s = 0.0;
  for (int mask = 0; mask < 16; ++mask) {
    int m = 0, sign = 1;
    double b = 0.0;
    for (int k = 0; k < 4; ++k) {
      const int sk = (mask >> k) & 1 ? 1 : -1;
      m += sk;
      sign *= sk;
      b += sk * beta[k];
    }
    s += static_cast<double>(sign) * std::pow(cplx(0.0, m / 3.0), j) * std::exp(cplx(-b, m * t / 3.0));
  }
  return s / 16.0;
}

inline std::vector<std::vector<double>> stirling_first(int n) {
  std::vector<std::vector<double>> s(static_cast<std::size_t>(n + 1), std::vector<double>(static_cast<std::size_t>(n + 1), 0.0));
  s[0][0] = 1.0;
  for (int a = 0; a < n; ++a)
    for (int k = 1; k <= a + 1; ++k) s[a + 1][k] = s[a][k - 1] - a * s[a][k];
  return s;
}

inline double binom(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace detail

/// log |h^{(l)}(s)| (-inf where the derivative vanishes).
inline double log_abs_h_derivative(double s, int ell, double alpha = 0.5) {
  check_alpha(alpha);
  if (!(s > 0.0)) throw DomainError("h: s must be positive");
  if (ell < 0 || ell > 8) throw DomainError("h: derivative order must be 0..8");
  const double t = std::log(s);
  const cplx A = detail::A_of(t, alpha);
  const double a = -alpha / 3.0;
  // Complete Bell polynomials B_i(x_1, ..., x_i) with x_j = a^j A.
  std::vector<cplx> bell(static_cast<std::size_t>(ell + 1));
  bell[0] = 1.0;
  for (int n = 0; n < ell; ++n) {
    cplx v = 0.0;
    for (int k = 0; k <= n; ++k) v += detail::binom(n, k) * bell[n - k] * std::pow(a, k + 1) * A;
    bell[n + 1] = v;
  }
  auto Ht = [&](int j) {
    cplx v = 0.0;
    for (int i = 0; i <= j; ++i) v += detail::binom(j, i) * bell[i] * detail::S_derivative(t, j - i);
    return v;
  };
  cplx body = 0.0;
  if (ell == 0) {
    body = Ht(0);
  } else {
    const auto st = detail::stirling_first(ell);
    for (int j = 1; j <= ell; ++j) body += st[ell][j] * Ht(j);
  }
  const double mag = std::abs(body);
  if (mag == 0.0) return -std::numeric_limits<double>::infinity();
  return -ell * t + A.real() + std::log(mag);
}

inline cplx h_value(double s, double alpha = 0.5) { return g_product(cplx(0.0, std::cbrt(s)), alpha); }

/// Central finite difference of order l of h at s with step ds (l <= 4).
inline cplx h_finite_difference(double s, int ell, double ds, double alpha = 0.5) {
  // Five-point stencils, second order in ds.
  static const double w[5][5] = {{0, 0, 1, 0, 0},
                                 {1.0 / 12, -2.0 / 3, 0, 2.0 / 3, -1.0 / 12},
                                 {-1.0 / 12, 4.0 / 3, -5.0 / 2, 4.0 / 3, -1.0 / 12},
                                 {-0.5, 1, 0, -1, 0.5},
                                 {1, -4, 6, -4, 1}};
  if (ell < 0 || ell > 4) throw DomainError("h_finite_difference: order must be 0..4");
  if (!(s - 2 * ds > 0.0)) throw DomainError("h_finite_difference: stencil reaches s <= 0");
  cplx v = 0.0;
  for (int j = 0; j < 5; ++j)
    if (w[ell][j] != 0.0) v += w[ell][j] * h_value(s + (j - 2) * ds, alpha);
  return v / std::pow(ds, ell);
}

struct DecayReport {
  int ell = 0;
  double alpha = 0.5;
  double c = 0.0;  // cos(alpha pi / 2)
  // Finite differences on the standard grid (s >= 1e-4), with the analytic values.
  std::vector<double> s_fd, fd_abs, analytic_abs;
  double fd_max_rel_error = 0.0;
  // Extended grid, envelope per period of the trigonometric factor.
  std::vector<double> s_env, log_env;
  double crossover = 0.0;    // below this s the envelope decreases monotonically to 0
  bool monotone_to_zero = false;
  double envelope_from = 0.0;  // largest s from which log|h^(l)| <= -c s^{-alpha/3} holds
  bool envelope_ok = false;
  bool small_s_bound_ok = true;  // l = 0: |h| <= exp(-0.5 c s^{-alpha/3}) for s <= 0.01
  double fitted_exponent = 0.0;
  bool exponent_ok = false;
  bool pass() const { return monotone_to_zero && envelope_ok && small_s_bound_ok && exponent_ok && fd_max_rel_error <= 1e-3; }
};

/// Decay of h^{(l)} as s -> 0. The finite-difference grid runs from 1e-1 to
/// s_fd_min; the envelope and the exponent fit use the exact derivative down
/// to s_ext_min.
inline DecayReport derivative_decay_check(int ell, double alpha = 0.5, double s_fd_min = 1e-4, double s_ext_min = 1e-60) {
  check_alpha(alpha);
  if (ell < 0 || ell > 4) throw DomainError("derivative_decay_check: order must be 0..4");
  DecayReport rep;
  rep.ell = ell;
  rep.alpha = alpha;
  rep.c = std::cos(alpha * kPi / 2);
  const double expo = alpha / 3.0;

  // Finite differences against the exact derivative.
  const int n_fd = 61;
  for (int j = 0; j < n_fd; ++j) {
    const double s = std::exp(std::log(1e-1) + (std::log(s_fd_min) - std::log(1e-1)) * j / (n_fd - 1));
    const double fd = std::abs(h_finite_difference(s, ell, 2e-3 * s, alpha));
    const double la = log_abs_h_derivative(s, ell, alpha);
    const double an = std::isfinite(la) ? std::exp(la) : 0.0;
    rep.s_fd.push_back(s);
    rep.fd_abs.push_back(fd);
    rep.analytic_abs.push_back(an);
    if (an > 0.0) rep.fd_max_rel_error = std::max(rep.fd_max_rel_error, std::abs(fd - an) / an);
    if (ell == 0 && s <= 0.01 && !(fd <= std::exp(-0.5 * rep.c * std::pow(s, -expo)))) rep.small_s_bound_ok = false;
  }

  // Envelope: maximum of log|h^(l)| over each period 3 pi of log s.
  const double t_hi = std::log(1e-1), t_lo = std::log(s_ext_min);
  const double period = 3 * kPi;
  const int per_bin = 64;
  for (double t1 = t_hi; t1 - period >= t_lo - 1e-9; t1 -= period) {
    double best = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < per_bin; ++j) best = std::max(best, log_abs_h_derivative(std::exp(t1 - period * (j + 0.5) / per_bin), ell, alpha));
    rep.s_env.push_back(std::exp(t1 - period / 2));
    rep.log_env.push_back(best);
  }
  const std::size_t nb = rep.log_env.size();
  std::size_t start = nb;
  while (start > 1 && rep.log_env[start - 1] < rep.log_env[start - 2]) --start;
  if (start == nb) start = nb - 1;
  rep.crossover = rep.s_env[start > 0 ? start - 1 : 0];
  rep.monotone_to_zero = start + 3 < nb && rep.log_env.back() < -100.0;

  std::size_t env_start = nb;
  while (env_start > 0 && rep.log_env[env_start - 1] <= -rep.c * std::pow(rep.s_env[env_start - 1], -expo)) --env_start;
  rep.envelope_from = env_start < nb ? rep.s_env[env_start] : 0.0;
  rep.envelope_ok = env_start < nb && rep.envelope_from >= 1e-20;

  // log(-log|h^(l)|) against log s over the asymptotic range s <= 1e-20.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t b = 0; b < nb; ++b) {
    if (rep.s_env[b] > 1e-20 || !(rep.log_env[b] < 0.0)) continue;
    const double x = std::log(rep.s_env[b]), y = std::log(-rep.log_env[b]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n >= 2) {
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    rep.fitted_exponent = -slope;
    rep.exponent_ok = std::abs(rep.fitted_exponent - expo) <= 0.2 * expo;
  }
  return rep;
}

}  // namespace qhalf::holo
