// Command-line front end: resolve a config (file, preset, environment,
// flags -- later sources override earlier ones), run the experiment, and
// report the written files.  Exit codes: 0 success, 1 execution failure
// (a manifest with status "failed" is still written), 2 configuration error.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "capsim/experiment.hpp"
#include "json.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Adiabatic-passage simulator for a two-polarization atom-cavity "
      "system: dressed-state spectra, quantum trajectories, density-matrix "
      "evolution, and photon-correlation measurements."};

  std::string kind, config_path, preset, out_prefix;
  std::uint64_t seed = 0;
  int n_traj = 0, jobs = -1;
  bool list_presets = false, dry_run = false;

  app.add_option("kind", kind,
                 "Experiment kind (overrides the config's \"kind\")");
  app.add_option("-c,--config", config_path,
                 "JSON config: a file path, or an inline object starting "
                 "with '{' (// comments allowed)");
  app.add_option("-p,--preset", preset, "Start from a named built-in preset");
  app.add_option("-s,--seed", seed, "Base RNG seed (overrides config and env)");
  app.add_option("-n,--traj", n_traj, "Number of trajectories");
  app.add_option("-j,--jobs", jobs, "Worker threads (0 = all cores)");
  app.add_option("-o,--out", out_prefix, "Output path prefix");
  app.add_flag("--list-presets", list_presets, "List built-in presets and exit");
  app.add_flag("--dry-run", dry_run,
               "Print the resolved config without running");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (list_presets) {
    for (const auto& name : capsim::preset_names()) std::printf("%s\n", name.c_str());
    return 0;
  }

  try {
    nlohmann::json doc = nlohmann::json::object();
    if (!config_path.empty()) {
      // An argument starting with '{' is an inline document, else a file path.
      const std::string text =
          config_path[0] == '{' ? config_path : read_file(config_path);
      doc = nlohmann::json::parse(text, nullptr, true,
                                  /*ignore_comments=*/true);
      if (!doc.is_object())
        throw std::runtime_error("config must hold a JSON object");
    }
    if (!preset.empty()) doc["preset"] = preset;
    if (!kind.empty()) doc["kind"] = kind;

    if (const char* env = std::getenv("SIMULATE_SEED")) {
      char* end = nullptr;
      const unsigned long long v = std::strtoull(env, &end, 10);
      if (end == env || *end != '\0')
        throw std::runtime_error("SIMULATE_SEED is not an unsigned integer");
      doc["seed"] = (std::uint64_t)v;
    }
    if (const char* env = std::getenv("SIMULATE_JOBS")) {
      char* end = nullptr;
      const long v = std::strtol(env, &end, 10);
      if (end == env || *end != '\0' || v < 0)
        throw std::runtime_error("SIMULATE_JOBS is not a nonnegative integer");
      doc["jobs"] = (int)v;
    }
    if (app.count("--seed")) doc["seed"] = seed;
    if (app.count("--traj")) doc["n_traj"] = n_traj;
    if (app.count("--jobs")) doc["jobs"] = jobs;
    if (app.count("--out")) doc["out"] = out_prefix;
    if (!doc.contains("out")) doc["out"] = "run";

    const capsim::ExperimentSpec spec =
        capsim::parse_experiment(doc.dump());

    if (dry_run) {
      std::fputs(capsim::spec_to_json(spec).c_str(), stdout);
      return 0;
    }

    const capsim::RunOutcome outcome = capsim::run_experiment(spec);
    for (const auto& f : outcome.files)
      std::printf("wrote %s (%llu bytes)\n", f.path.c_str(),
                  (unsigned long long)f.bytes);
    for (const auto& w : outcome.warnings)
      std::fprintf(stderr, "warning: %s\n", w.c_str());
    std::printf("done in %.2f s\n", outcome.seconds);
    return 0;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
