#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "qhalf/experiments.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace qhalf;

namespace {

fs::path preset_dir() {
  if (const char* env = std::getenv("QHALF_PRESET_DIR")) return env;
  return QHALF_PRESET_DIR;
}

json load_json(const fs::path& p) {
  std::ifstream f(p);
  if (!f) throw ConfigError("cannot open " + p.string());
  try {
    return json::parse(f);
  } catch (const json::parse_error& e) {
    throw ConfigError(p.string() + ": " + e.what());
  }
}

int list_presets() {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(preset_dir()))
    if (e.path().extension() == ".json" && e.path().stem() != "schema") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    const json j = load_json(f);
    std::printf("%-28s %-13s %s\n", f.stem().string().c_str(), j.value("kind", "?").c_str(),
                j.value("description", "").c_str());
  }
  return 0;
}

void print_report(const experiments::Report& r) {
  std::printf("%s (%s): %s\n", r.name.c_str(), r.kind.c_str(), r.pass() ? "PASS" : "FAIL");
  for (const auto& c : r.checks) {
    if (c.relation == "true")
      std::printf("  [%s] %s\n", c.pass ? "pass" : "FAIL", c.name.c_str());
    else
      std::printf("  [%s] %s = %.6g (%s %.6g)\n", c.pass ? "pass" : "FAIL", c.name.c_str(), c.value, c.relation.c_str(),
                  c.threshold);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qhalf: Q-valued half-domain experiments"};
  std::string kind, config, preset, out;
  std::optional<std::uint64_t> seed;
  bool list = false;
  std::string kinds;
  for (const auto& k : experiments::kinds()) kinds += (kinds.empty() ? "" : " | ") + k;
  app.add_option("kind", kind, kinds);
  auto* cfg_opt = app.add_option("--config", config, "experiment config (JSON)");
  app.add_option("--preset", preset, "named preset from the preset directory")->excludes(cfg_opt);
  app.add_option("--out", out, "directory for report.json and CSV tables");
  app.add_option("--seed", seed, "override the config seed");
  app.add_flag("--list-presets", list, "list presets and exit");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (list) return list_presets();
    if (kind.empty()) throw ConfigError("missing experiment kind (" + kinds + ")");
    if (std::find(experiments::kinds().begin(), experiments::kinds().end(), kind) == experiments::kinds().end())
      throw ConfigError("unknown kind \"" + kind + "\" (" + kinds + ")");
    if (config.empty() && preset.empty()) throw ConfigError("need --config FILE or --preset NAME");
    const fs::path path = config.empty() ? preset_dir() / (preset + ".json") : fs::path(config);
    if (!preset.empty() && !fs::exists(path)) throw ConfigError("unknown preset \"" + preset + "\" (see --list-presets)");
    json cfg = load_json(path);
    if (cfg.is_object() && !cfg.contains("name")) cfg["name"] = path.stem().string();

    experiments::Report rep;
    try {
      rep = experiments::run(cfg, seed, kind);
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      std::fprintf(stderr, "qhalf: %s\n", e.what());
      if (!out.empty()) {
        const json err = {{"kind", kind}, {"name", cfg.value("name", kind)}, {"pass", false}, {"error", e.what()}};
        io::write_text(fs::path(out) / "report.json", err.dump(2) + "\n");
      }
      return 1;
    }
    print_report(rep);
    if (!out.empty()) {
      io::write_text(fs::path(out) / "report.json", rep.to_json().dump(2) + "\n");
      for (const auto& t : rep.tables) io::write_csv(out, t);
    }
    return rep.pass() ? 0 : 1;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "qhalf: usage error: %s\n", e.what());
    return 2;
  } catch (const fs::filesystem_error& e) {
    std::fprintf(stderr, "qhalf: %s\n", e.what());
    return 2;
  }
}
