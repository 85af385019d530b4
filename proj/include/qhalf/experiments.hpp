#pragma once

// Experiment configs (JSON) and the pipelines behind each CLI kind. Every
// pipeline returns a Report: named checks, a details object and plot tables.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "qhalf/boundary_data.hpp"
#include "qhalf/density.hpp"
#include "qhalf/frequency.hpp"
#include "qhalf/holo.hpp"
#include "qhalf/io.hpp"
#include "qhalf/linear_reference.hpp"
#include "qhalf/solver.hpp"

namespace qhalf::experiments {

using json = nlohmann::json;
using io::Table;

inline const std::vector<std::string>& kinds() {
  static const std::vector<std::string> k{"metric-suite", "solve",  "frequency", "collapse",
                                          "zeros",        "decay",  "density",   "two-circles"};
  return k;
}

struct Check {
  std::string name;
  double value = 0.0;
  std::string relation;  // "<=", ">=", ">", "==", "true"
  double threshold = 0.0;
  bool pass = false;
};

struct Report {
  std::string kind;
  std::string name;
  std::vector<Check> checks;
  json details = json::object();
  std::vector<Table> tables;

  bool pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
  }
  void le(std::string n, double v, double t) { checks.push_back({std::move(n), v, "<=", t, v <= t}); }
  void ge(std::string n, double v, double t) { checks.push_back({std::move(n), v, ">=", t, v >= t}); }
  void gt(std::string n, double v, double t) { checks.push_back({std::move(n), v, ">", t, v > t}); }
  void is_true(std::string n, bool v) { checks.push_back({std::move(n), v ? 1.0 : 0.0, "true", 1.0, v}); }

  json to_json() const {
    json c = json::array();
    for (const Check& k : checks)
      c.push_back({{"name", k.name}, {"value", io::number(k.value)}, {"relation", k.relation},
                   {"threshold", io::number(k.threshold)}, {"pass", k.pass}});
    json t = json::array();
    for (const Table& tb : tables) t.push_back(tb.name + ".csv");
    return {{"kind", kind}, {"name", name}, {"pass", pass()}, {"checks", c}, {"details", details}, {"tables", t}};
  }
};

// ---------------------------------------------------------------------------
// Config reading. Every error names the field path; unknown keys are errors.

class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }
  const std::string& path() const { return path_; }
  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json& raw(const std::string& key) {
    if (!j_.contains(key)) throw ConfigError(at(key) + ": required field missing");
    used_.insert(key);
    return j_.at(key);
  }

  template <class T>
  T req(const std::string& key) {
    return convert<T>(raw(key), at(key));
  }
  template <class T>
  T get(const std::string& key, T def) {
    if (!j_.contains(key)) return def;
    return req<T>(key);
  }
  Reader obj(const std::string& key) { return Reader(raw(key), at(key)); }

  /// Rejects keys that were never read.
  void done() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key())) throw ConfigError(at(it.key()) + ": unknown field");
  }
  void ignore(const std::string& key) { used_.insert(key); }

  template <class T>
  static T convert(const json& v, const std::string& where) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(where + ": expected true or false");
      return v.get<bool>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ConfigError(where + ": expected an integer");
      return v.get<T>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ConfigError(where + ": expected a number");
      return v.get<T>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(where + ": expected a string");
      return v.get<std::string>();
    } else {
      // std::vector of one of the above
      if (!v.is_array()) throw ConfigError(where + ": expected an array");
      T out;
      for (std::size_t i = 0; i < v.size(); ++i)
        out.push_back(convert<typename T::value_type>(v[i], where + "[" + std::to_string(i) + "]"));
      return out;
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

inline double positive(double v, const std::string& where) {
  if (!(v > 0.0)) throw ConfigError(where + ": must be positive");
  return v;
}

inline InterfaceSpec parse_interface(Reader r) {
  const std::string type = r.req<std::string>("type");
  InterfaceSpec s;
  if (type == "flat") s = InterfaceSpec::flat();
  else if (type == "parabola") s = InterfaceSpec::parabola(r.req<double>("a"));
  else if (type == "sine") s = InterfaceSpec::sine(r.req<double>("amplitude"), r.req<double>("k"));
  else if (type == "cubic") s = InterfaceSpec::cubic(r.get<double>("c1", 0.0), r.get<double>("c2", 0.0), r.get<double>("c3", 0.0));
  else throw ConfigError(r.at("type") + ": unknown interface \"" + type + "\" (flat, parabola, sine, cubic)");
  r.done();
  return s;
}

struct DomainConfig {
  double radius = 1.0;
  double h = 1.0 / 64;
  InterfaceSpec iface = InterfaceSpec::flat();

  std::shared_ptr<const HalfDomain> build(double spacing) const {
    try {
      return build_halfdisk(radius, iface, spacing);
    } catch (const DomainError& e) {
      throw ConfigError(std::string("domain: ") + e.what());
    }
  }
  std::shared_ptr<const HalfDomain> build() const { return build(h); }
};

inline DomainConfig parse_domain(Reader r) {
  DomainConfig d;
  d.radius = positive(r.get<double>("radius", 1.0), r.at("radius"));
  d.h = positive(r.get<double>("h", 1.0 / 64), r.at("h"));
  if (r.has("interface")) d.iface = parse_interface(r.obj("interface"));
  r.done();
  return d;
}

inline int parse_q(Reader& r, const std::string& key = "q") {
  const int q = r.req<int>(key);
  if (q < 1) throw ConfigError(r.at(key) + ": Q must be >= 1");
  if (q > 8) throw ConfigError(r.at(key) + ": Q above 8 is not supported");
  return q;
}

inline Polynomial parse_poly(const json& v, const std::string& where) {
  auto c = Reader::convert<std::vector<double>>(v, where);
  if (c.size() > 10) throw ConfigError(where + ": at most 10 coefficients (degree 3)");
  return Polynomial::from(std::move(c));
}

/// Named closed-form boundary data for the solver.
inline BoundaryData parse_data(Reader r, int q) {
  const std::string gen = r.req<std::string>("generator");
  BoundaryData b;
  auto mode = [&] {
    try {
      return phi_mode(r.get<std::string>("phi", "trace"));
    } catch (const DomainError& e) {
      throw ConfigError(r.at("phi") + ": " + e.what());
    }
  };
  if (gen == "linear") b = linear_data(q, r.get<double>("a", 0.0), r.get<double>("b", 1.0), mode());
  else if (gen == "quadratic-harmonic")
    b = quadratic_harmonic_data(q, r.get<double>("a", 1.0), r.get<double>("b", 0.0), mode());
  else if (gen == "odd-cubic") b = odd_cubic_data(q, r.get<double>("amplitude", 0.5));
  else if (gen == "custom") {
    std::vector<Polynomial> plus, minus;
    const json& pj = r.raw("plus");
    if (!pj.is_array()) throw ConfigError(r.at("plus") + ": expected an array of coefficient lists");
    for (std::size_t i = 0; i < pj.size(); ++i) plus.push_back(parse_poly(pj[i], r.at("plus") + "[" + std::to_string(i) + "]"));
    if (r.has("minus")) {
      const json& mj = r.raw("minus");
      if (!mj.is_array()) throw ConfigError(r.at("minus") + ": expected an array of coefficient lists");
      for (std::size_t i = 0; i < mj.size(); ++i)
        minus.push_back(parse_poly(mj[i], r.at("minus") + "[" + std::to_string(i) + "]"));
    }
    const Polynomial phi = r.has("phi") ? parse_poly(r.raw("phi"), r.at("phi")) : Polynomial{};
    if (static_cast<int>(plus.size()) != q) throw ConfigError(r.at("plus") + ": need Q polynomials");
    try {
      b = custom_data(plus, minus, phi);
    } catch (const Error& e) {
      throw ConfigError(r.at("minus") + ": " + e.what());
    }
  } else if (gen == "sqrt-branch") {
    throw ConfigError(r.at("generator") + ": sqrt-branch is a closed-form map (frequency source \"closed-form\"), not solver data");
  } else {
    throw ConfigError(r.at("generator") + ": unknown generator \"" + gen +
                      "\" (linear, quadratic-harmonic, odd-cubic, custom)");
  }
  r.done();
  return b;
}

inline SolverConfig parse_solver(Reader r) {
  SolverConfig c;
  c.max_sweeps = r.get<int>("max_sweeps", c.max_sweeps);
  c.eps_stop = r.get<double>("eps_stop", c.eps_stop);
  c.update_tol = r.get<double>("update_tol", c.update_tol);
  c.omega = r.get<double>("omega", c.omega);
  c.collapsed = r.get<bool>("collapsed", c.collapsed);
  c.starts = r.get<int>("starts", c.starts);
  if (c.max_sweeps < 1) throw ConfigError(r.at("max_sweeps") + ": must be >= 1");
  if (!(c.eps_stop > 0.0)) throw ConfigError(r.at("eps_stop") + ": must be positive");
  if (c.omega != 0.0 && !(c.omega > 0.0 && c.omega < 2.0)) throw ConfigError(r.at("omega") + ": must be 0 or in (0, 2)");
  if (c.starts < 1 || c.starts > 3) throw ConfigError(r.at("starts") + ": must be 1, 2 or 3");
  r.done();
  return c;
}

inline FrequencyConfig parse_frequency(Reader r) {
  FrequencyConfig c;
  c.r_max_fraction = r.get<double>("r_max_fraction", c.r_max_fraction);
  c.ratio = r.get<double>("ratio", c.ratio);
  c.subsamples = r.get<int>("subsamples", c.subsamples);
  c.reliable_cells = r.get<int>("reliable_cells", c.reliable_cells);
  c.r_min_cells = r.get<double>("r_min_cells", c.r_min_cells);
  if (!(c.r_max_fraction > 0.0 && c.r_max_fraction <= 1.0)) throw ConfigError(r.at("r_max_fraction") + ": must be in (0, 1]");
  if (!(c.ratio > 0.0 && c.ratio < 1.0)) throw ConfigError(r.at("ratio") + ": must be in (0, 1)");
  if (c.subsamples < 1) throw ConfigError(r.at("subsamples") + ": must be >= 1");
  r.done();
  return c;
}

struct SolveSpec {
  DomainConfig domain;
  int q = 1;
  json data;  // parsed per q
  SolverConfig solver;
  std::string path;

  QHalfMap run(double h) const {
    auto dom = domain.build(h);
    const BoundaryData b = parse_data(Reader(data, path.empty() ? "data" : path + ".data"), q);
    return minimize(dom, q, 1, b, solver);
  }
};

inline SolveSpec parse_solve_spec(Reader& r) {
  SolveSpec s;
  s.path = r.path();
  s.domain = parse_domain(r.obj("domain"));
  s.q = parse_q(r);
  s.data = r.raw("data");
  parse_data(Reader(s.data, r.at("data")), s.q);  // validate now
  if (r.has("solver")) s.solver = parse_solver(r.obj("solver"));
  return s;
}

// ---------------------------------------------------------------------------
// Shared pieces.

inline QPoint random_qpoint(std::mt19937_64& rng, int q, int n) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> v(static_cast<std::size_t>(q * n));
  for (double& x : v) x = g(rng);
  return QPoint(q, n, v);
}

inline Table map_table(const QHalfMap& u, const std::string& name) {
  const int q = u.multiplicity();
  Table t{name, {"x", "y", "tag"}, {}};
  for (int i = 0; i < q; ++i) t.columns.push_back("plus_" + std::to_string(i));
  for (int i = 0; i + 1 < q; ++i) t.columns.push_back("minus_" + std::to_string(i));
  t.columns.push_back("phi");
  const HalfDomain& dom = u.domain();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t id = 0; id < u.size(); ++id) {
    const NodeTag tag = dom.tag(id);
    std::vector<double> row{dom.node(id).x, dom.node(id).y, static_cast<double>(static_cast<int>(tag))};
    const bool plus = dom.on_side(id, Side::Plus), minus = dom.on_side(id, Side::Minus) && q > 1;
    for (int i = 0; i < q; ++i) row.push_back(plus ? u.plus_raw(id)[i] : nan);
    for (int i = 0; i + 1 < q; ++i) row.push_back(minus ? u.minus_raw(id)[i] : nan);
    row.push_back(tag == NodeTag::Interface ? u.phi_raw(id)[0] : nan);
    t.add(std::move(row));
  }
  return t;
}

inline json solve_info(const QHalfMap& u) {
  return {{"converged", u.info.converged},
          {"sweeps", u.info.sweeps},
          {"energy", u.info.energy},
          {"initial_energy", u.info.initial_energy},
          {"descent_violations", u.info.descent_violations},
          {"starts_disagree", u.info.starts_disagree},
          {"best_start", u.info.best_start}};
}

// ---------------------------------------------------------------------------
// metric-suite

inline Report run_metric_suite(Reader r, std::uint64_t seed) {
  Report rep;
  const int pairs = r.get<int>("pairs", 1000);
  const int q_max = r.get<int>("q_max", 6), n_max = r.get<int>("n_max", 4);
  const double tol = r.get<double>("tolerance", 1e-12), tri = r.get<double>("triangle_slack", 1e-10);
  r.done();
  if (pairs < 1) throw ConfigError("pairs: must be >= 1");
  if (q_max < 1 || q_max > kBruteForceMaxQ) throw ConfigError("q_max: must be in 1.." + std::to_string(kBruteForceMaxQ));
  if (n_max < 1) throw ConfigError("n_max: must be >= 1");
  std::mt19937_64 rng(seed);
  double worst = 0.0, worst_tri = -std::numeric_limits<double>::infinity(), worst_sym = 0.0, worst_id = 0.0;
  Table t{"metric", {"q", "n", "assignment", "bruteforce"}, {}};
  for (int k = 0; k < pairs; ++k) {
    const int q = 1 + static_cast<int>(rng() % static_cast<unsigned>(q_max));
    const int n = 1 + static_cast<int>(rng() % static_cast<unsigned>(n_max));
    const QPoint a = random_qpoint(rng, q, n), b = random_qpoint(rng, q, n), c = random_qpoint(rng, q, n);
    const double g = g_distance(a, b), bf = g_distance_bruteforce(a, b);
    worst = std::max(worst, std::abs(g - bf));
    worst_tri = std::max(worst_tri, g_distance(a, c) - g_distance(a, b) - g_distance(b, c));
    worst_sym = std::max(worst_sym, std::abs(g - g_distance(b, a)));
    worst_id = std::max(worst_id, g_distance(a, a));
    t.add({static_cast<double>(q), static_cast<double>(n), g, bf});
  }
  rep.le("max |assignment - bruteforce|", worst, tol);
  rep.le("triangle excess", worst_tri, tri);
  rep.le("symmetry defect", worst_sym, 0.0);
  rep.le("identity defect", worst_id, 0.0);
  rep.details = {{"pairs", pairs}, {"q_max", q_max}, {"n_max", n_max}, {"seed", seed}};
  rep.tables.push_back(std::move(t));
  return rep;
}

// ---------------------------------------------------------------------------
// solve (single solve, or the annulus interpolation estimate)

inline Report run_interpolation(Reader r, std::uint64_t seed) {
  Report rep;
  const DomainConfig dc = parse_domain(r.obj("domain"));
  const int pairs = r.get<int>("pairs", 50);
  const int q_max = r.get<int>("q_max", 3);
  const auto lambdas = r.get<std::vector<double>>("lambdas", {0.1, 0.2});
  const double c_max = r.get<double>("c_max", 20.0);
  r.done();
  if (pairs < 1) throw ConfigError("pairs: must be >= 1");
  if (q_max < 1) throw ConfigError("q_max: must be >= 1");
  auto dom = dc.build();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  // Random sheets: quadratic polynomials; phi (the last plus sheet) is shared by f and g.
  auto poly = [&] {
    std::vector<double> c(6);
    for (double& v : c) v = g(rng);
    return Polynomial::from(c);
  };
  auto build = [&](int q, const std::vector<Polynomial>& sheets, const Polynomial& phi) {
    QHalfMap u(dom, q, 1);
    for (std::size_t id = 0; id < dom->size(); ++id) {
      const Point2 p = dom->node(id);
      std::vector<double> minus(static_cast<std::size_t>(q - 1));
      for (int i = 0; i < q - 1; ++i) minus[i] = sheets[i](p);
      std::vector<double> plus = minus;
      plus.push_back(phi(p));
      const NodeTag t = dom->tag(id);
      if (plus_only(t)) u.set_plus(id, QPoint(q, 1, plus));
      else if (minus_only(t)) {
        if (q > 1) u.set_minus(id, QPoint(q - 1, 1, minus));
      } else {
        u.set_interface(id, std::vector<double>{phi(p)}, minus);
      }
    }
    return u;
  };
  Table t{"interpolation", {"pair", "q", "lambda", "band_energy", "energy_f", "energy_g", "distance_sq", "rhs", "ratio"}, {}};
  double fitted = 0.0;
  for (int k = 0; k < pairs; ++k) {
    const int q = 1 + static_cast<int>(rng() % static_cast<unsigned>(q_max));
    std::vector<Polynomial> fs, gs;
    for (int i = 0; i < q - 1; ++i) fs.push_back(poly());
    for (int i = 0; i < q - 1; ++i) gs.push_back(poly());
    const Polynomial phi = poly();
    const QHalfMap f = build(q, fs, phi), gm = build(q, gs, phi);
    for (double lambda : lambdas) {
      const InterpolationReport ir = interpolate_annulus(f, gm, lambda).report;
      const double ratio = ir.rhs() > 0.0 ? ir.band_energy / ir.rhs() : 0.0;
      fitted = std::max(fitted, ratio);
      t.add({static_cast<double>(k), static_cast<double>(q), lambda, ir.band_energy, ir.energy_f, ir.energy_g,
             ir.distance_sq, ir.rhs(), ratio});
    }
  }
  rep.le("fitted C", fitted, c_max);
  rep.details = {{"pairs", pairs}, {"lambdas", lambdas}, {"fitted_C", fitted}, {"seed", seed}, {"h", dc.h}};
  rep.tables.push_back(std::move(t));
  return rep;
}

inline Report run_solve(Reader r, std::uint64_t seed) {
  const std::string mode = r.get<std::string>("mode", "minimize");
  if (mode == "interpolation") return run_interpolation(r, seed);
  if (mode != "minimize") throw ConfigError("mode: must be \"minimize\" or \"interpolation\"");
  Report rep;
  const SolveSpec spec = parse_solve_spec(r);
  const std::string reference = r.get<std::string>("reference", "none");
  const double ref_tol = r.get<double>("reference_tolerance", 1e-8);
  const int spot = r.get<int>("spot_check_trials", 0);
  r.done();
  if (reference != "none" && reference != "linear") throw ConfigError("reference: must be \"none\" or \"linear\"");
  if (reference == "linear" && spec.q != 1) throw ConfigError("reference: the linear reference needs q = 1");
  const QHalfMap u = spec.run(spec.domain.h);
  rep.is_true("converged", u.info.converged);
  rep.le("descent violations", u.info.descent_violations, 0);
  rep.details = {{"solve", solve_info(u)}, {"q", spec.q}, {"h", spec.domain.h}, {"interface", spec.domain.iface.name}};
  if (reference == "linear") {
    const BoundaryData b = parse_data(Reader(spec.data, "data"), 1);
    const auto ref = linear_reference(u.domain(), [&](Point2 p) { return b.plus(p).flat()[0]; });
    double err = 0.0;
    for (std::size_t id = 0; id < u.size(); ++id)
      if (u.domain().on_side(id, Side::Plus)) err = std::max(err, std::abs(u.plus_raw(id)[0] - ref[id]));
    rep.le("max |solver - linear reference|", err, ref_tol);
    rep.details["reference_error"] = err;
  }
  if (spot > 0) {
    const double dec = minimality_spot_check(u, spot, seed, 0.1, spec.solver.collapsed);
    rep.le("spot-check energy decrease", dec, 1e-12 * (1.0 + u.info.energy));
  }
  if (spec.q > 1 && spec.solver.collapsed) {
    const CollapseCheck cc = check_collapsed(u, 1e-12);
    rep.details["interface_spread"] = cc.spread;
  }
  rep.tables.push_back(map_table(u, "solution"));
  return rep;
}

// ---------------------------------------------------------------------------
// collapse

inline Report run_collapse(Reader r, std::uint64_t) {
  Report rep;
  const DomainConfig dc = parse_domain(r.obj("domain"));
  const int q = parse_q(r);
  const json data = r.raw("data");
  parse_data(Reader(data, "data"), q);
  SolverConfig sc;
  if (r.has("solver")) sc = parse_solver(r.obj("solver"));
  if (!sc.collapsed) throw ConfigError("solver.collapsed: the collapse experiment needs a collapsed interface");
  const auto hs = r.req<std::vector<double>>("h_list");
  if (hs.empty()) throw ConfigError("h_list: needs at least one spacing");
  for (std::size_t i = 0; i < hs.size(); ++i) {
    positive(hs[i], "h_list[" + std::to_string(i) + "]");
    if (i && !(hs[i] < hs[i - 1])) throw ConfigError("h_list: spacings must decrease");
  }
  Reader ck = r.obj("checks");
  const double spread_abs = ck.get<double>("sheet_spread_max", -1.0);
  const double spread_rel = ck.get<double>("sheet_spread_rel", -1.0);
  const bool spread_mono = ck.get<bool>("sheet_spread_monotone", false);
  const bool harm_mono = ck.get<bool>("harmonic_defect_monotone", false);
  const double harm_abs = ck.get<double>("harmonic_defect_max", -1.0);
  const double odd_rel = ck.get<double>("odd_defect_rel", -1.0);
  const double odd_abs = ck.get<double>("odd_defect_max", -1.0);
  ck.done();
  r.done();

  Table t{"collapse", {"h", "sheet_spread", "harmonic_defect", "odd_defect", "oscillation", "energy", "sweeps"}, {}};
  std::vector<CollapseDecomposition> decs;
  double osc = 0.0;
  bool converged = true;
  for (double h : hs) {
    auto dom = dc.build(h);
    const BoundaryData b = parse_data(Reader(data, "data"), q);
    const QHalfMap u = minimize(dom, q, 1, b, sc);
    converged = converged && u.info.converged;
    osc = boundary_oscillation(*dom, b, q);
    decs.push_back(collapse_decompose(u));
    const auto& d = decs.back();
    t.add({h, d.sheet_spread, d.harmonic_defect, d.odd_defect, osc, u.info.energy, static_cast<double>(u.info.sweeps)});
  }
  const CollapseDecomposition& fin = decs.back();
  rep.is_true("converged", converged);
  if (spread_mono) {
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < decs.size(); ++i) worst = std::max(worst, decs[i].sheet_spread - decs[i - 1].sheet_spread);
    rep.checks.push_back({"sheet_spread decreasing (max step change)", worst, "<", 0.0, decs.size() > 1 && worst < 0.0});
  }
  if (spread_rel >= 0.0) rep.le("sheet_spread / oscillation (finest)", fin.sheet_spread / osc, spread_rel);
  if (spread_abs >= 0.0) rep.le("sheet_spread (finest)", fin.sheet_spread, spread_abs);
  if (harm_mono) {
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < decs.size(); ++i)
      worst = std::max(worst, decs[i].harmonic_defect - decs[i - 1].harmonic_defect);
    rep.checks.push_back({"harmonic_defect decreasing (max step change)", worst, "<", 0.0, decs.size() > 1 && worst < 0.0});
  }
  if (harm_abs >= 0.0) rep.le("harmonic_defect (finest)", fin.harmonic_defect, harm_abs);
  const double odd = std::isnan(fin.odd_defect) ? 0.0 : fin.odd_defect;
  if (odd_rel >= 0.0) rep.le("odd_defect / oscillation (finest)", odd / osc, odd_rel);
  if (odd_abs >= 0.0) rep.le("odd_defect (finest)", odd, odd_abs);
  rep.details = {{"q", q}, {"oscillation", osc}, {"interface", dc.iface.name}};
  rep.tables.push_back(std::move(t));
  return rep;
}

// ---------------------------------------------------------------------------
// frequency

// |x|^a inside r0 glued continuously to r0^{a-b} |x|^b outside. The frequency
// falls from a to b across r0, faster than any e^{Cr} factor can absorb once
// the degrees are far enough apart.
struct GluedControl {
  double r0 = 0.3, inner = 2.0, outer = 0.5;
  double operator()(Point2 p) const {
    const double rho = norm(p);
    return rho <= r0 ? std::pow(rho, inner) : std::pow(r0, inner - outer) * std::pow(rho, outer);
  }
};

struct FrequencySource {
  FieldSet fields;
  std::shared_ptr<const HalfDomain> dom;
  std::optional<QHalfMap> map;
};

inline FrequencySource closed_form_fields(std::shared_ptr<const HalfDomain> dom, const std::string& name, int q,
                                          GluedControl glue, const std::string& where) {
  FrequencySource s;
  s.dom = dom;
  if (name == "harmonic-2xy") {
    s.fields.push_back(sample_field(dom, Side::Plus, 1, 1, [](Point2 p) { return QPoint::scalars({2 * p.x * p.y}); }));
  } else if (name == "collapsed-linear") {
    s.fields.push_back(sample_field(dom, Side::Plus, q, 1, [q](Point2 p) {
      return QPoint(q, 1, std::vector<double>(static_cast<std::size_t>(q), p.y));
    }));
    if (q > 1)
      s.fields.push_back(sample_field(dom, Side::Minus, q - 1, 1, [q](Point2 p) {
        return QPoint(q - 1, 1, std::vector<double>(static_cast<std::size_t>(q - 1), p.y));
      }));
  } else if (name == "sqrt-branch") {
    s.fields.push_back(sample_field(dom, Side::Both, 2, 1, sqrt_branch));
  } else if (name == "glued-control") {
    s.fields.push_back(
        sample_field(dom, Side::Plus, 1, 1, [glue](Point2 p) { return QPoint::scalars({glue(p)}); }));
  } else {
    throw ConfigError(where + ": unknown closed-form map \"" + name +
                      "\" (harmonic-2xy, collapsed-linear, sqrt-branch, glued-control)");
  }
  return s;
}

struct FrequencyCase {
  std::string name;
  std::string source;  // "solve" or "closed-form"
  SolveSpec solve;
  DomainConfig domain;
  std::string map;
  int q = 1;
  GluedControl glue;

  FrequencySource build(double h) const {
    if (source == "solve") {
      FrequencySource s;
      s.map = solve.run(h);
      s.dom = s.map->domain_ptr();
      s.fields = side_fields(*s.map);
      return s;
    }
    return closed_form_fields(domain.build(h), map, q, glue, name + ".map");
  }
  double h() const { return source == "solve" ? solve.domain.h : domain.h; }
};

inline Table scan_table(const FrequencyScan& sc, const std::string& name) {
  Table t{name, {"r", "D", "H", "E", "Gq", "I"}, {}};
  for (std::size_t k = 0; k < sc.r.size(); ++k) t.add({sc.r[k], sc.D[k], sc.H[k], sc.E[k], sc.Gq[k], sc.I[k]});
  return t;
}

inline Table scan_diagnostics(const FrequencyScan& sc, const std::string& name) {
  Table t{name, {"r", "reliable", "outer_residual", "cs_residual"}, {}};
  for (std::size_t k = 0; k < sc.r.size(); ++k)
    t.add({sc.r[k], static_cast<double>(sc.reliable[k]), sc.outer_residual[k], sc.cs_residual[k]});
  return t;
}

// log H(r) / H(r_min) in the smallest reliable decade, with the two-sided bounds.
inline Table doubling_table(const FrequencyScan& sc, double lambda, const std::string& name) {
  Table t{name, {"r", "log_H_ratio", "H_lower", "H_upper", "log_D_ratio", "D_lower", "D_upper"}, {}};
  const auto rel = sc.reliable_indices();
  if (rel.empty() || !std::isfinite(sc.I0)) return t;
  const std::size_t ks = rel.back();
  const double s = sc.r[ks], c = sc.c_eff, i0 = sc.I0;
  for (std::size_t k : rel) {
    if (sc.r[k] > 10.0 * s) continue;
    const double tt = sc.r[k], lr = std::log(tt / s);
    t.add({tt, std::log(sc.H[k] / sc.H[ks]), -c * (tt - s) + (1.0 + 2.0 * i0 / lambda) * lr,
           c * (tt - s) + (1.0 + 2.0 * lambda * i0) * lr, std::log(sc.D[k] / sc.D[ks]),
           -2.0 * std::log(lambda) - c * (tt - s) + (2.0 * i0 / lambda) * lr,
           2.0 * std::log(lambda) + c * (tt - s) + (2.0 * lambda * i0) * lr});
  }
  return t;
}

inline void run_frequency_case(Reader r, const FrequencyConfig& fcfg, Report& rep) {
  FrequencyCase fc;
  fc.name = r.req<std::string>("name");
  fc.source = r.req<std::string>("source");
  if (fc.source == "solve") {
    fc.solve = parse_solve_spec(r);
  } else if (fc.source == "closed-form") {
    fc.domain = parse_domain(r.obj("domain"));
    fc.map = r.req<std::string>("map");
    fc.q = r.has("q") ? parse_q(r) : 1;
    fc.glue.r0 = r.get<double>("r0", 0.3);
    fc.glue.inner = r.get<double>("inner_degree", 2.0);
    fc.glue.outer = r.get<double>("outer_degree", 0.5);
    if (!(fc.glue.outer > 0.0 && fc.glue.inner > fc.glue.outer))
      throw ConfigError(r.at("inner_degree") + ": need inner_degree > outer_degree > 0");
    static const std::set<std::string> maps{"harmonic-2xy", "collapsed-linear", "sqrt-branch", "glued-control"};
    if (!maps.count(fc.map))
      throw ConfigError(r.at("map") + ": unknown closed-form map \"" + fc.map +
                        "\" (harmonic-2xy, collapsed-linear, sqrt-branch, glued-control)");
    if (!(fc.glue.r0 > 0.0 && fc.glue.r0 < fc.domain.radius)) throw ConfigError(r.at("r0") + ": must lie in (0, radius)");
  } else {
    throw ConfigError(r.at("source") + ": must be \"solve\" or \"closed-form\"");
  }
  Reader ck = r.obj("checks");
  const std::string pre = fc.name + ": ";

  const FrequencySource src = fc.build(fc.h());
  const DistanceField dist = build_distance_field(src.dom);
  const FrequencyScan sc = frequency_scan(src.fields, dist, fcfg);
  json d = {{"h", sc.h}, {"I0", io::number(sc.I0)}, {"c_mono", sc.c_mono}, {"c_eff", sc.c_eff},
            {"reliable_radii", sc.reliable_indices().size()}, {"truncated", sc.truncated}};
  if (src.map) {
    d["solve"] = solve_info(*src.map);
    rep.is_true(pre + "converged", src.map->info.converged);
  }
  rep.ge(pre + "reliable radii", static_cast<double>(sc.reliable_indices().size()), 2.0);

  if (ck.has("expected_I")) {
    Reader e = ck.obj("expected_I");
    const double v = e.req<double>("value"), tol = e.req<double>("tol");
    e.done();
    double worst = 0.0;
    for (std::size_t k : sc.reliable_indices()) worst = std::max(worst, std::abs(sc.I[k] - v));
    rep.le(pre + "max |I(r) - " + io::format_number(v) + "|", worst, tol);
  }
  if (ck.has("outer_identity")) {
    Reader e = ck.obj("outer_identity");
    const double tol = e.get<double>("tol", 0.05);
    const double coarse_h = e.get<double>("coarse_h", 0.0), factor = e.get<double>("shrink_factor", 1.5);
    e.done();
    const IdentityCheck oc = check_outer_identity(sc, tol);
    rep.le(pre + "max |D - E| / D", oc.worst, tol);
    d["outer_worst"] = oc.worst;
    if (coarse_h > 0.0) {
      // Shrink measured on radii reliable at both spacings.
      const FrequencySource cs = fc.build(coarse_h);
      const FrequencyScan sc2 = frequency_scan(cs.fields, build_distance_field(cs.dom), fcfg);
      double fine = 0.0, coarse = 0.0;
      for (std::size_t k = 0; k < std::min(sc.r.size(), sc2.r.size()); ++k) {
        if (!sc.reliable[k] || !sc2.reliable[k]) continue;
        fine = std::max(fine, sc.outer_residual[k]);
        coarse = std::max(coarse, sc2.outer_residual[k]);
      }
      const double shrink = fine > 0.0 ? coarse / fine : std::numeric_limits<double>::infinity();
      rep.ge(pre + "outer residual shrink (common radii)", shrink, factor);
      d["outer_common_fine"] = fine;
      d["outer_common_coarse"] = coarse;
      rep.tables.push_back(scan_table(sc2, "frequency_" + fc.name + "_coarse"));
    }
  }
  if (ck.has("h_derivative")) {
    Reader e = ck.obj("h_derivative");
    const double tol = e.get<double>("tol", 0.05);
    e.done();
    const IdentityCheck hc = check_H_derivative(sc, tol);
    rep.le(pre + "max |H' - H/r - 2E| / H", hc.worst, sc.c_mono + tol);
  }
  if (ck.has("monotonicity")) {
    Reader e = ck.obj("monotonicity");
    const double tol = e.get<double>("tol", 0.02);
    const std::string expect = e.get<std::string>("expect", "pass");
    e.done();
    if (expect != "pass" && expect != "fail") throw ConfigError(e.at("expect") + ": must be \"pass\" or \"fail\"");
    const MonotonicityCheck mc = check_monotonicity(sc, tol);
    if (expect == "pass") rep.le(pre + "monotonicity violation", mc.worst_violation, tol);
    else rep.gt(pre + "monotonicity violation (control must fail)", mc.worst_violation, tol);
    d["monotonicity_violation"] = mc.worst_violation;
  }
  if (ck.has("doubling")) {
    Reader e = ck.obj("doubling");
    const double lambda = e.get<double>("lambda", 1.2);
    e.done();
    if (!(lambda > 1.0)) throw ConfigError(e.at("lambda") + ": must exceed 1");
    const DoublingCheck dc = check_doubling_bounds(sc, lambda);
    rep.ge(pre + "doubling pairs", dc.pairs, 1.0);
    rep.ge(pre + "H lower margin", dc.h_lower_margin, 0.0);
    rep.ge(pre + "H upper margin", dc.h_upper_margin, 0.0);
    rep.ge(pre + "D lower margin", dc.d_lower_margin, 0.0);
    rep.ge(pre + "D upper margin", dc.d_upper_margin, 0.0);
    rep.tables.push_back(doubling_table(sc, lambda, "doubling_" + fc.name));
  }
  if (ck.has("homogeneity")) {
    Reader e = ck.obj("homogeneity");
    const double deg = e.req<double>("degree"), tol = e.get<double>("tol", 0.01);
    e.done();
    rep.le(pre + "homogeneity defect", homogeneity_defect(src.fields, deg), tol);
  }
  ck.done();
  r.done();
  rep.details["cases"][fc.name] = d;
  rep.tables.push_back(scan_table(sc, "frequency_" + fc.name));
  rep.tables.push_back(scan_diagnostics(sc, "frequency_" + fc.name + "_diagnostics"));
}

inline Report run_frequency(Reader r, std::uint64_t) {
  Report rep;
  FrequencyConfig fcfg;
  if (r.has("frequency")) fcfg = parse_frequency(r.obj("frequency"));
  const json& cases = r.raw("cases");
  if (!cases.is_array() || cases.empty()) throw ConfigError("cases: expected a non-empty array");
  r.done();
  std::set<std::string> names;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    Reader c(cases[i], "cases[" + std::to_string(i) + "]");
    if (c.has("name") && !names.insert(cases[i].value("name", "")).second)
      throw ConfigError(c.at("name") + ": duplicate case name");
    run_frequency_case(c, fcfg, rep);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// zeros

inline Report run_zeros(Reader r, std::uint64_t) {
  Report rep;
  const double alpha = r.get<double>("alpha", 0.5);
  const double tol = r.get<double>("match_tol", 1e-10);
  const json& annuli = r.raw("annuli");
  const json expected = r.has("expected_counts") ? r.raw("expected_counts") : json();
  r.done();
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha: must lie in (0, 1)");
  if (!annuli.is_array() || annuli.empty()) throw ConfigError("annuli: expected a non-empty array of [r1, r2]");
  if (!expected.is_null() && (!expected.is_array() || expected.size() != annuli.size()))
    throw ConfigError("expected_counts: need one count per annulus");
  Table t{"zeros", {"annulus", "ring", "k", "re", "im", "abs", "arg", "match_error"}, {}};
  json per = json::array();
  for (std::size_t i = 0; i < annuli.size(); ++i) {
    const std::string where = "annuli[" + std::to_string(i) + "]";
    const auto ab = Reader::convert<std::vector<double>>(annuli[i], where);
    if (ab.size() != 2 || !(ab[0] > 0.0 && ab[1] > ab[0])) throw ConfigError(where + ": need [r1, r2] with 0 < r1 < r2");
    holo::ZeroReport zr;
    try {
      zr = holo::find_zeros_numeric(ab[0], ab[1], alpha, tol);
    } catch (const DiscrepancyError& e) {
      rep.is_true(where + " zero matching (" + e.what() + ")", false);
      continue;
    }
    rep.le(where + " max match error", zr.max_error, tol);
    rep.checks.push_back({where + " found == predicted", static_cast<double>(zr.found.size()), "==",
                          static_cast<double>(zr.predicted.size()), zr.found.size() == zr.predicted.size()});
    if (!expected.is_null()) {
      const int want = Reader::convert<int>(expected[i], "expected_counts[" + std::to_string(i) + "]");
      rep.checks.push_back({where + " count", static_cast<double>(zr.found.size()), "==", static_cast<double>(want),
                            static_cast<int>(zr.found.size()) == want});
    }
    for (std::size_t j = 0; j < zr.found.size(); ++j) {
      const holo::cplx z = zr.found[j];
      const double ring = std::round(std::log(std::abs(z)) / holo::kPi);
      const double k = std::round((std::arg(z) * 6.0 / holo::kPi + 3.0) / 2.0);
      double err = 0.0;
      for (std::size_t m = 0; m < zr.predicted.size(); ++m)
        if (std::abs(zr.predicted[m] - z) / std::max(1.0, std::abs(z)) <= tol) err = zr.match_error[m];
      t.add({static_cast<double>(i), ring, k, z.real(), z.imag(), std::abs(z), std::arg(z), err});
    }
    per.push_back({{"annulus", ab}, {"found", zr.found.size()}, {"predicted", zr.predicted.size()},
                   {"max_error", zr.max_error}, {"cells", zr.cells_searched}});
  }
  rep.details = {{"alpha", alpha}, {"annuli", per}};
  rep.tables.push_back(std::move(t));
  return rep;
}

// ---------------------------------------------------------------------------
// decay

inline Report run_decay(Reader r, std::uint64_t) {
  Report rep;
  const double alpha = r.get<double>("alpha", 0.5);
  const auto orders = r.get<std::vector<int>>("orders", {0, 1, 2, 3, 4});
  const double s_min = r.get<double>("s_fd_min", 1e-4), s_ext = r.get<double>("s_ext_min", 1e-60);
  const double fd_tol = r.get<double>("fd_tolerance", 1e-3), expo_tol = r.get<double>("exponent_tolerance", 0.2);
  r.done();
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha: must lie in (0, 1)");
  if (!(s_min > 0.0 && s_min < 0.1)) throw ConfigError("s_fd_min: must lie in (0, 0.1)");
  if (!(s_ext > 0.0 && s_ext <= 1e-21)) throw ConfigError("s_ext_min: must be positive and <= 1e-21");
  Table fd{"decay_fd", {"ell", "s", "fd_abs", "exact_abs"}, {}};
  Table env{"decay_envelope", {"ell", "s", "log_envelope", "log_bound"}, {}};
  json per = json::array();
  for (int ell : orders) {
    if (ell < 0 || ell > 4) throw ConfigError("orders: each order must be 0..4");
    const holo::DecayReport d = holo::derivative_decay_check(ell, alpha, s_min, s_ext);
    const std::string pre = "l=" + std::to_string(ell) + ": ";
    rep.le(pre + "finite difference vs exact (rel)", d.fd_max_rel_error, fd_tol);
    rep.is_true(pre + "monotone to 0 below crossover", d.monotone_to_zero);
    rep.is_true(pre + "below e^{-c s^{-alpha/3}} from s <= 1e-20", d.envelope_ok);
    if (ell == 0) rep.is_true(pre + "|h| <= e^{-0.5 c s^{-alpha/3}} for s <= 0.01", d.small_s_bound_ok);
    rep.le(pre + "|fitted exponent / (alpha/3) - 1|", std::abs(d.fitted_exponent / (alpha / 3.0) - 1.0), expo_tol);
    for (std::size_t j = 0; j < d.s_fd.size(); ++j) fd.add({double(ell), d.s_fd[j], d.fd_abs[j], d.analytic_abs[j]});
    for (std::size_t j = 0; j < d.s_env.size(); ++j)
      env.add({double(ell), d.s_env[j], d.log_env[j], -d.c * std::pow(d.s_env[j], -alpha / 3.0)});
    per.push_back({{"ell", ell}, {"crossover", d.crossover}, {"envelope_from", d.envelope_from},
                   {"fitted_exponent", d.fitted_exponent}, {"fd_max_rel_error", d.fd_max_rel_error}});
  }
  rep.details = {{"alpha", alpha}, {"c", std::cos(alpha * holo::kPi / 2)}, {"orders", per}};
  rep.tables.push_back(std::move(fd));
  rep.tables.push_back(std::move(env));
  return rep;
}

// ---------------------------------------------------------------------------
// density

inline Report run_density(Reader r, std::uint64_t) {
  Report rep;
  holo::BranchedSurface S;
  if (r.has("surface")) {
    Reader s = r.obj("surface");
    S.alpha = s.get<double>("alpha", S.alpha);
    S.tau0 = s.get<double>("tau0", S.tau0);
    S.rho = s.get<double>("rho", S.rho);
    s.done();
    try {
      S.validate();
    } catch (const DomainError& e) {
      throw ConfigError(std::string("surface: ") + e.what());
    }
  }
  const auto radii = r.get<std::vector<double>>("radii", {0.04, 0.02, 0.01, 0.005});
  const json& points = r.raw("points");
  const int boundary_samples = r.get<int>("boundary_samples", 0);
  const auto boundary_radii = r.get<std::vector<double>>("boundary_radii", {0.02, 0.01});
  const double boundary_slack = r.get<double>("boundary_slack", 0.05);
  const double monotone_slack = r.get<double>("monotone_slack", 0.01);
  const int curve_samples = r.get<int>("curve_samples", 0);
  r.done();
  if (!points.is_array()) throw ConfigError("points: expected an array");
  json per = json::array();
  for (std::size_t i = 0; i < points.size(); ++i) {
    Reader p(points[i], "points[" + std::to_string(i) + "]");
    const std::string name = p.req<std::string>("name");
    holo::C2 target{};
    if (p.has("z")) {
      const auto z = p.req<std::vector<double>>("z");
      if (z.size() != 2) throw ConfigError(p.at("z") + ": need [re, im]");
      target = S.G({z[0], z[1]});
    } else {
      const auto c = p.req<std::vector<double>>("p");
      if (c.size() != 4) throw ConfigError(p.at("p") + ": need 4 real coordinates");
      target = {holo::cplx(c[0], c[1]), holo::cplx(c[2], c[3])};
    }
    const double expected = p.req<double>("expected"), tol = p.req<double>("rel_tol");
    p.done();
    const holo::DensityReport d = holo::density_at(S, target, radii);
    rep.le(name + ": |Theta / " + io::format_number(expected) + " - 1|", std::abs(d.limit / expected - 1.0), tol);
    Table t{"density_" + std::to_string(i), {"r", "ratio"}, {}};
    for (std::size_t k = 0; k < d.radii.size(); ++k) t.add({d.radii[k], d.ratio[k]});
    rep.tables.push_back(std::move(t));
    per.push_back({{"name", name}, {"table", "density_" + std::to_string(i) + ".csv"}, {"limit", d.limit},
                   {"radii", d.radii}, {"ratios", d.ratio}, {"mass", d.mass}});
  }
  if (boundary_samples > 0) {
    // Points of gamma away from the flat branch point at 0.
    double worst = std::numeric_limits<double>::infinity(), worst_mono = 0.0;
    int used = 0;
    for (int j = 0; j < boundary_samples; ++j) {
      const holo::cplx z = S.gamma((j + 0.5) / boundary_samples);
      if (z.real() == 0.0 && std::abs(z.imag()) < 0.3) continue;
      const holo::DensityReport d = holo::density_at(S, S.G(z), boundary_radii);
      worst = std::min(worst, d.limit);
      for (std::size_t k = 1; k < d.ratio.size(); ++k) worst_mono = std::max(worst_mono, d.ratio[k - 1] / d.ratio[k] - 1.0);
      ++used;
    }
    rep.ge("min Theta over " + std::to_string(used) + " boundary points", worst, 0.5 * (1.0 - boundary_slack));
    rep.le("boundary ratio increase with r (rel)", worst_mono, monotone_slack);
    rep.details["boundary_min_theta"] = worst;
  }
  if (curve_samples > 0) {
    const holo::CurveReport c = holo::boundary_curve(S, static_cast<std::size_t>(curve_samples));
    rep.is_true("Gamma injective on samples", c.scan.injective);
    bool all = true;
    for (const auto& dp : c.double_points) all = all && dp.ok;
    rep.is_true("double points certified (" + std::to_string(c.double_points.size()) + ")", all);
    Table ct{"curve", {"t", "re_z", "im_z", "x1", "x2", "x3", "x4", "jacobian"}, {}};
    for (std::size_t k = 0; k < c.t.size(); ++k)
      ct.add({c.t[k], c.z[k].real(), c.z[k].imag(), c.points[k][0].real(), c.points[k][0].imag(), c.points[k][1].real(),
              c.points[k][1].imag(), S.jacobian(c.z[k])});
    rep.tables.push_back(std::move(ct));
    json dps = json::array();
    for (const auto& dp : c.double_points)
      dps.push_back({{"n", dp.n}, {"sign", dp.sign}, {"z1", {dp.z1.real(), dp.z1.imag()}}, {"z2", {dp.z2.real(), dp.z2.imag()}},
                     {"image_gap", dp.image_gap}, {"ok", dp.ok}});
    rep.details["double_points"] = dps;
    rep.details["min_separation"] = c.scan.min_separation;
  }
  rep.details["surface"] = {{"alpha", S.alpha}, {"tau0", S.tau0}, {"rho", S.rho}, {"tau", S.tau()}};
  rep.details["points"] = per;
  return rep;
}

// ---------------------------------------------------------------------------
// two-circles

inline Report run_two_circles(Reader r, std::uint64_t) {
  Report rep;
  const double R1 = r.req<double>("R1"), R2 = r.req<double>("R2");
  const json& points = r.raw("points");
  r.done();
  if (!(R1 > 0.0 && R2 > R1)) throw ConfigError("R1, R2: need 0 < R1 < R2");
  if (!points.is_array() || points.empty()) throw ConfigError("points: expected a non-empty array");
  Table t{"two_circles", {"point", "r", "exact", "numeric"}, {}};
  json per = json::array();
  for (std::size_t i = 0; i < points.size(); ++i) {
    Reader p(points[i], "points[" + std::to_string(i) + "]");
    const double d = p.req<double>("d"), tol = p.req<double>("rel_tol");
    const double gap_tol = p.get<double>("numeric_tol", 2e-3);
    p.done();
    if (!(d >= 0.0)) throw ConfigError(p.at("d") + ": must be >= 0");
    const holo::TwoCirclesReport tc = holo::two_circles_density(R1, R2, d);
    const std::string pre = "d=" + io::format_number(d) + ": ";
    rep.le(pre + "|ratio limit / " + io::format_number(tc.expected) + " - 1|", std::abs(tc.limit / tc.expected - 1.0), tol);
    rep.le(pre + "|exact - numeric|", tc.max_numeric_gap, gap_tol);
    for (std::size_t k = 0; k < tc.radii.size(); ++k) t.add({double(i), tc.radii[k], tc.exact[k], tc.numeric[k]});
    per.push_back({{"d", d}, {"expected", tc.expected}, {"limit", tc.limit}, {"ratios", tc.exact}});
  }
  rep.details = {{"R1", R1}, {"R2", R2}, {"points", per}};
  rep.tables.push_back(std::move(t));
  return rep;
}

// ---------------------------------------------------------------------------

/// Runs a config object. `seed` overrides the config's own seed when given.
inline Report run(const json& cfg, std::optional<std::uint64_t> seed_override = std::nullopt,
                  const std::string& expected_kind = "") {
  Reader r(cfg, "");
  const std::string kind = r.req<std::string>("kind");
  if (std::find(kinds().begin(), kinds().end(), kind) == kinds().end()) throw ConfigError("kind: unknown kind \"" + kind + "\"");
  if (!expected_kind.empty() && kind != expected_kind)
    throw ConfigError("kind: config is a \"" + kind + "\" experiment, not \"" + expected_kind + "\"");
  const std::string name = r.get<std::string>("name", kind);
  r.ignore("description");
  const auto seed = static_cast<std::uint64_t>(r.get<std::int64_t>("seed", 1));
  const std::uint64_t s = seed_override ? *seed_override : seed;
  // The kind-specific reader sees every other field.
  json body = cfg;
  for (const char* k : {"kind", "name", "description", "seed"}) body.erase(k);
  Reader b(body, "");
  Report rep;
  if (kind == "metric-suite") rep = run_metric_suite(b, s);
  else if (kind == "solve") rep = run_solve(b, s);
  else if (kind == "frequency") rep = run_frequency(b, s);
  else if (kind == "collapse") rep = run_collapse(b, s);
  else if (kind == "zeros") rep = run_zeros(b, s);
  else if (kind == "decay") rep = run_decay(b, s);
  else if (kind == "density") rep = run_density(b, s);
  else rep = run_two_circles(b, s);
  rep.kind = kind;
  rep.name = name;
  return rep;
}

}  // namespace qhalf::experiments
