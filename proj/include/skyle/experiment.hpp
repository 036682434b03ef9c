#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "skyle/acf.hpp"
#include "skyle/errors.hpp"
#include "skyle/pricing_filter.hpp"

namespace skyle {

inline constexpr const char* kVersion = "0.1.0";

enum class Mode { Solve, Markov, Simulate, Validate, Sweep };

struct SimConfig {
  std::size_t T = 1'000'000;
  std::optional<std::size_t> burn_in;  // default 2 * T_cut
  std::size_t n_paths = 1;
  std::uint64_t base_seed = 1;
  std::size_t batches = 50;
};

struct SweepConfig {
  std::vector<double> tau_mu;
  std::vector<double> tau_nt;
};

struct ExperimentConfig {
  Mode mode = Mode::Solve;
  std::optional<AcfSpec> dividend_acf;
  std::optional<AcfSpec> nt_acf;
  std::size_t T_cut = 500;
  std::size_t T_it = 200;
  double tol = 1e-8;  // relative to G_0
  double relaxation = 1.0;
  FilterMode filter = FilterMode::Stationary;
  std::size_t max_lag = 100;
  std::optional<SimConfig> sim;
  std::optional<SweepConfig> sweep;
  std::string output_dir = "out";
  std::size_t workers = 1;
};

Mode parse_mode(const std::string& s);
const char* mode_name(Mode m);

AcfSpec acf_from_json(const nlohmann::json& j);
nlohmann::json acf_to_json(const AcfSpec& spec);

// Validates and fills defaults; throws ConfigError.
ExperimentConfig parse_config(const nlohmann::json& j);
nlohmann::json resolved_config(const ExperimentConfig& cfg);

int exit_code_for(ErrorKind kind);
inline constexpr int kExitValidationFailed = 6;

// Runs f(0..n-1) on up to `workers` threads; results are indexed, so ordering is deterministic.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& f);

// Dispatches on cfg.mode, writes result files into cfg.output_dir and returns the exit status.
// Errors are reported as a JSON record (stderr and error.json) and mapped to exit codes.
int run(const ExperimentConfig& cfg, std::ostream& log);

// Column table with '#'-prefixed metadata lines, written atomically.
class Table {
 public:
  explicit Table(std::vector<std::string> columns) : columns_(std::move(columns)) {}
  void add_meta(const std::string& line) { meta_.push_back(line); }
  void add_row(const std::vector<double>& row);
  void add_row(const std::vector<std::string>& row);
  std::string render() const;
  void write(const std::string& path) const;

 private:
  std::vector<std::string> columns_;
  std::vector<std::string> meta_;
  std::vector<std::string> rows_;
};

std::string format_number(double x);
void write_atomic(const std::string& path, const std::string& content);

}  // namespace skyle
