#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sys/wait.h>

#include "qhalf/experiments.hpp"

using namespace qhalf;
using experiments::json;
namespace fs = std::filesystem;

namespace {

std::string config_error(const json& cfg) {
  try {
    experiments::run(cfg);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

json small_collapse() {
  return json::parse(R"({
    "kind": "collapse",
    "domain": {"interface": {"type": "flat"}},
    "q": 2,
    "data": {"generator": "linear", "a": 0.0, "b": 1.0},
    "h_list": [0.0625],
    "checks": {"sheet_spread_max": 1e-8}
  })");
}

int cli(const std::string& args) {
  const int st = std::system((std::string(QHALF_CLI) + " " + args + " > /dev/null 2>&1").c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

}  // namespace

TEST(BoundaryData, GeneratorsOnTheBoundary) {
  const Point2 p{0.6, 0.8};
  const BoundaryData lin = linear_data(3, 2.0, -1.0);
  const QPoint lp = lin.plus(p);
  for (double v : lp.flat()) EXPECT_DOUBLE_EQ(v, 0.4);
  EXPECT_EQ(lin.minus(p).multiplicity(), 2);
  EXPECT_DOUBLE_EQ(lin.phi(p)[0], 0.4);
  EXPECT_DOUBLE_EQ(linear_data(3, 2.0, -1.0, PhiMode::Zero).phi(p)[0], 0.0);
  EXPECT_DOUBLE_EQ(quadratic_harmonic_data(1, 1.0, 0.5).plus(p).flat()[0], 0.36 - 0.64 + 0.48);

  const BoundaryData odd = odd_cubic_data(3, 0.5);
  const double im3 = 3 * 0.36 * 0.8 - 0.512;
  const QPoint sp = odd.plus(p);
  const auto s = sp.flat();
  EXPECT_NEAR(s[0], 0.8 - 0.5 * im3, 1e-15);
  EXPECT_NEAR(s[1], 0.8, 1e-15);
  EXPECT_NEAR(s[2], 0.8 + 0.5 * im3, 1e-15);
  // odd in y sheet by sheet
  const QPoint mp = odd.plus({0.6, -0.8});
  const auto m = mp.flat();
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(m[i], -s[i], 1e-15);

  EXPECT_THROW(phi_mode("trace-ish"), DomainError);
  EXPECT_THROW(odd_cubic_data(0), DomainError);
  EXPECT_THROW(custom_data({Polynomial{{1.0}}, Polynomial{{2.0}}}, {}, Polynomial{}), DimensionMismatch);
  EXPECT_THROW(Polynomial::from(std::vector<double>(11, 1.0)), DomainError);
}

TEST(BoundaryData, SqrtBranchAndOscillation) {
  const QPoint w = sqrt_branch({0.0, 1.0});
  EXPECT_NEAR(std::abs(w.flat()[0]), std::sqrt(0.5), 1e-15);
  EXPECT_DOUBLE_EQ(w.flat()[0], -w.flat()[1]);
  auto dom = build_halfdisk(1.0, InterfaceSpec::flat(), 1.0 / 32);
  EXPECT_NEAR(boundary_oscillation(*dom, linear_data(2, 0.0, 1.0), 2), 2.0, 1e-12);
  EXPECT_NEAR(boundary_oscillation(*dom, odd_cubic_data(3, 0.5), 3), 3.0, 1e-12);
}

TEST(Io, CsvAndNumbers) {
  io::Table t{"empty", {"r", "ratio"}, {}};
  EXPECT_EQ(io::to_csv(t), "r,ratio\n");
  t.add({0.1, 1.5});
  EXPECT_EQ(io::to_csv(t), "r,ratio\n0.10000000000000001,1.5\n");
  EXPECT_THROW(t.add({1.0}), DimensionMismatch);
  EXPECT_EQ(io::format_number(std::nan("")), "nan");
  EXPECT_EQ(io::number(-INFINITY), "-inf");
  const QPoint a(2, 3, std::vector<double>{1, 2, 3, 4, 5, 6});
  const QPoint b = io::qpoint_from_json(io::to_json(a));
  EXPECT_EQ(g_distance(a, b), 0.0);
  EXPECT_THROW(io::qpoint_from_json(json::parse(R"({"Q": 2, "n": 1, "data": [[1]]})")), DimensionMismatch);
}

TEST(Config, ErrorsNameTheField) {
  json c = small_collapse();
  c["q"] = -3;
  EXPECT_NE(config_error(c).find("q: Q must be >= 1"), std::string::npos) << config_error(c);
  c = small_collapse();
  c["domain"]["interface"]["type"] = "zigzag";
  EXPECT_NE(config_error(c).find("domain.interface.type"), std::string::npos) << config_error(c);
  c = small_collapse();
  c["domain"]["h"] = "fine";
  EXPECT_NE(config_error(c).find("domain.h: expected a number"), std::string::npos);
  c = small_collapse();
  c["checks"]["sheet_sprad_max"] = 1.0;
  EXPECT_NE(config_error(c).find("checks.sheet_sprad_max: unknown field"), std::string::npos);
  c = small_collapse();
  c.erase("data");
  EXPECT_NE(config_error(c).find("data: required field missing"), std::string::npos);
  c = small_collapse();
  c["data"]["generator"] = "sqrt-branch";
  EXPECT_NE(config_error(c).find("data.generator"), std::string::npos);
  c = small_collapse();
  c["h_list"] = {0.03125, 0.0625};
  EXPECT_NE(config_error(c).find("h_list"), std::string::npos);
  EXPECT_NE(config_error(json::parse(R"({"kind": "zeros", "annuli": [[2.0, 1.0]]})")).find("annuli[0]"), std::string::npos);
  EXPECT_NE(config_error(json::parse(R"({"kind": "frequency", "cases": [{"name": "a", "source": "closed-form",
      "domain": {"h": 0.0625}, "map": "nope", "checks": {}}]})")).find("cases[0].map"), std::string::npos);
  EXPECT_NE(config_error(json::parse(R"({"kind": "lunch"})")).find("kind"), std::string::npos);
}

TEST(Config, KindMustMatch) {
  EXPECT_THROW(experiments::run(small_collapse(), std::nullopt, "zeros"), ConfigError);
}

TEST(Experiments, CollapseOfLinearDataIsExact) {
  const experiments::Report r = experiments::run(small_collapse());
  EXPECT_TRUE(r.pass());
  ASSERT_EQ(r.tables.size(), 1u);
  EXPECT_EQ(r.tables[0].columns[1], "sheet_spread");
  EXPECT_LE(r.tables[0].rows[0][1], 1e-12);
}

TEST(Experiments, ReportsAreDeterministic) {
  const json c = json::parse(R"({"kind": "metric-suite", "pairs": 50, "seed": 5})");
  const std::string a = experiments::run(c).to_json().dump(), b = experiments::run(c).to_json().dump();
  EXPECT_EQ(a, b);
  const auto r1 = experiments::run(c), r2 = experiments::run(c, 6);
  EXPECT_NE(io::to_csv(r1.tables[0]), io::to_csv(r2.tables[0]));
}

TEST(Experiments, FrequencyTableColumns) {
  const experiments::Report r = experiments::run(json::parse(R"({"kind": "frequency", "cases": [{"name": "xy",
      "source": "closed-form", "domain": {"h": 0.03125}, "map": "harmonic-2xy",
      "checks": {"expected_I": {"value": 2.0, "tol": 0.05}, "doubling": {"lambda": 1.2}}}]})"));
  EXPECT_TRUE(r.pass()) << r.to_json().dump(1);
  std::vector<std::string> names;
  for (const auto& t : r.tables) names.push_back(t.name);
  ASSERT_EQ(names.size(), 3u);
  EXPECT_EQ(names[0], "doubling_xy");
  EXPECT_EQ(names[1], "frequency_xy");
  EXPECT_EQ(r.tables[1].columns, (std::vector<std::string>{"r", "D", "H", "E", "Gq", "I"}));
  EXPECT_EQ(names[2], "frequency_xy_diagnostics");
}

TEST(Experiments, GluedControlIsNotMonotone) {
  const experiments::GluedControl g{0.3, 2.0, 0.5};
  EXPECT_DOUBLE_EQ(g({0.3, 0.0}), 0.09);
  EXPECT_NEAR(g({0.0, 1.2}), std::pow(0.3, 1.5) * std::sqrt(1.2), 1e-15);
  const experiments::Report r = experiments::run(json::parse(R"({"kind": "frequency", "cases": [{"name": "glue",
      "source": "closed-form", "domain": {"h": 0.0078125}, "map": "glued-control",
      "checks": {"monotonicity": {"tol": 0.02, "expect": "fail"}}}]})"));
  EXPECT_TRUE(r.pass()) << r.to_json().dump(1);
}

TEST(Cli, ExitCodes) {
  const fs::path dir = fs::temp_directory_path() / "qhalf_cli_test";
  fs::create_directories(dir);
  json bad = small_collapse();
  bad["q"] = -1;
  std::ofstream(dir / "bad.json") << bad.dump();
  std::ofstream(dir / "good.json") << small_collapse().dump();
  json failing = small_collapse();
  failing["data"] = json::parse(R"({"generator": "odd-cubic"})");
  std::ofstream(dir / "failing.json") << failing.dump();
  std::ofstream(dir / "broken.json") << "{ not json";

  EXPECT_EQ(cli("collapse --config " + (dir / "good.json").string() + " --out " + (dir / "out").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "out" / "report.json"));
  EXPECT_TRUE(fs::exists(dir / "out" / "collapse.csv"));
  EXPECT_EQ(cli("collapse --config " + (dir / "failing.json").string()), 1);
  EXPECT_EQ(cli("collapse --config " + (dir / "bad.json").string()), 2);
  EXPECT_EQ(cli("collapse --config " + (dir / "broken.json").string()), 2);
  EXPECT_EQ(cli("zeros --config " + (dir / "good.json").string()), 2);
  EXPECT_EQ(cli("collapse"), 2);
  EXPECT_EQ(cli("bogus --preset zeros-annulus-n0"), 2);
  EXPECT_EQ(cli("zeros --preset no-such-preset"), 2);
  EXPECT_EQ(cli("zeros --preset zeros-annulus-n0 --config x.json"), 2);
  EXPECT_EQ(cli("--list-presets"), 0);
  EXPECT_EQ(cli("zeros --preset zeros-annulus-n0"), 0);
  fs::remove_all(dir);
}

TEST(Cli, SameSeedSameBytes) {
  const fs::path dir = fs::temp_directory_path() / "qhalf_cli_bytes";
  fs::remove_all(dir);
  ASSERT_EQ(cli("metric-suite --preset ac1-metric-suite --out " + (dir / "a").string()), 0);
  ASSERT_EQ(cli("metric-suite --preset ac1-metric-suite --out " + (dir / "b").string()), 0);
  auto slurp = [](const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(f), {});
  };
  for (const char* f : {"report.json", "metric.csv"}) EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
  fs::remove_all(dir);
}
