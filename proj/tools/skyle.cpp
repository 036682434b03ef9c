#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "skyle/errors.hpp"
#include "skyle/experiment.hpp"

namespace {

int config_failure(const std::string& msg) {
  const nlohmann::json rec = {{"error", "config"}, {"message", msg}, {"exit_code", 2}, {"version", skyle::kVersion}};
  std::cerr << rec.dump() << "\n";
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stationary linear equilibrium solver for Kyle-type markets"};
  std::string config_path;
  std::optional<std::string> mode;
  std::optional<std::size_t> workers;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output_dir;
  app.add_option("--config", config_path, "JSON experiment config")->required();
  app.add_option("--mode", mode, "Override mode: solve, markov, simulate, validate, sweep");
  app.add_option("--workers", workers, "Worker threads (overrides SKYLE_WORKERS and the config)");
  app.add_option("--seed", seed, "Override sim.base_seed");
  app.add_option("--output-dir", output_dir, "Override output_dir");
  CLI11_PARSE(app, argc, argv);

  skyle::ExperimentConfig cfg;
  try {
    std::ifstream in(config_path);
    if (!in) return config_failure("cannot read config file " + config_path);
    nlohmann::json j = nlohmann::json::parse(in);
    if (mode) j["mode"] = *mode;
    if (output_dir) j["output_dir"] = *output_dir;
    if (seed) {
      if (!j.contains("sim") || !j["sim"].is_object()) j["sim"] = nlohmann::json::object();
      j["sim"]["base_seed"] = *seed;
    }
    cfg = skyle::parse_config(j);
  } catch (const nlohmann::json::exception& e) {
    return config_failure(std::string("invalid JSON: ") + e.what());
  } catch (const skyle::Error& e) {
    return config_failure(e.what());
  }

  if (const char* env = std::getenv("SKYLE_WORKERS")) {
    try {
      const long v = std::stol(env);
      if (v < 1) return config_failure("SKYLE_WORKERS must be a positive integer");
      cfg.workers = static_cast<std::size_t>(v);
    } catch (const std::exception&) {
      return config_failure("SKYLE_WORKERS must be a positive integer");
    }
  }
  if (workers) cfg.workers = std::max<std::size_t>(1, *workers);

  return skyle::run(cfg, std::cerr);
}
