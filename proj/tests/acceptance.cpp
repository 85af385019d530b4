// Acceptance criteria 1-11, each driven by its shipped preset.
//   qhalf_acceptance            run all
//   qhalf_acceptance --only N   run criterion N

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "qhalf/experiments.hpp"

using namespace qhalf;
using nlohmann::json;

namespace {

struct Criterion {
  int id;
  std::string title;
  std::vector<std::string> presets;
  double max_seconds;  // runtime budget; 0 = none stated
};

const std::vector<Criterion> kCriteria{
    {1, "metric oracle suite", {"ac1-metric-suite"}, 10},
    {2, "classical-limit solve", {"ac2-classical-limit"}, 30},
    {3, "collapse at desk scale", {"ac3-collapse-odd-cubic"}, 300},
    {4, "outer-variation identity D = E", {"ac4-outer-identity"}, 0},
    {5, "frequency of homogeneous maps", {"ac5-homogeneous"}, 0},
    {6, "almost-monotonicity of e^{Cr} I(r)", {"ac6-almost-monotonicity"}, 0},
    {7, "doubling bounds", {"ac7-doubling"}, 0},
    {8, "zero sets of g", {"ac8-zeros"}, 60},
    {9, "flat extension decay", {"ac9-decay"}, 0},
    {10, "densities", {"ac10-two-circles", "ac10-densities"}, 300},
    {11, "interpolation estimate", {"ac11-interpolation"}, 0},
};

json load(const std::string& name) {
  std::ifstream f(std::filesystem::path(QHALF_PRESET_DIR) / (name + ".json"));
  if (!f) throw ConfigError("missing preset " + name);
  json j = json::parse(f);
  j["name"] = name;
  return j;
}

bool run(const Criterion& c) {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<experiments::Report> reports;
  std::string error;
  try {
    for (const auto& p : c.presets) reports.push_back(experiments::run(load(p)));
  } catch (const std::exception& e) {
    error = e.what();
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  bool pass = error.empty();
  std::string first_fail;
  for (const auto& r : reports)
    for (const auto& k : r.checks)
      if (!k.pass) {
        pass = false;
        if (first_fail.empty()) first_fail = k.name;
      }
  const bool in_time = c.max_seconds <= 0 || secs <= c.max_seconds;
  pass = pass && in_time;

  std::string why = !error.empty() ? "error: " + error
                    : !first_fail.empty() ? "first failing check: " + first_fail
                    : !in_time ? "over time budget" : "all checks pass";
  std::printf("AC%d %s  %s  (%.1fs%s)  %s\n", c.id, pass ? "PASS" : "FAIL", c.title.c_str(), secs,
              c.max_seconds > 0 ? (" of " + std::to_string(static_cast<int>(c.max_seconds)) + "s").c_str() : "",
              why.c_str());
  for (const auto& r : reports)
    for (const auto& k : r.checks) {
      if (k.relation == "true")
        std::printf("    [%s] %s: %s\n", k.pass ? "pass" : "FAIL", r.name.c_str(), k.name.c_str());
      else
        std::printf("    [%s] %s: %s = %.6g (%s %.6g)\n", k.pass ? "pass" : "FAIL", r.name.c_str(), k.name.c_str(),
                    k.value, k.relation.c_str(), k.threshold);
    }
  std::fflush(stdout);
  return pass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  int only = 0;
  app.add_option("--only", only, "run a single criterion (1-11)")->check(CLI::Range(1, 11));
  CLI11_PARSE(app, argc, argv);
  bool all = true;
  for (const auto& c : kCriteria)
    if (only == 0 || c.id == only) all = run(c) && all;
  return all ? 0 : 1;
}
