#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dpda/engines.hpp"
#include "dpda/harness.hpp"

namespace dpda {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class OracleNotConverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct NetworkParams {
  SequenceKind kind = SequenceKind::Static;
  std::string topology = "small_world";  // or "fig7"
  std::size_t num_edges = 45;
  std::size_t period = 5;
  double keep_prob = 0.8;
};

struct ScenarioConfig {
  std::string name;
  std::uint64_t master_seed = 2018;
  std::size_t replications = 25;
  std::string output_dir = "out";
  ClassoParams problem;
  NetworkParams network;
  RunConfig engine;  // schedule_mode is overridden per entry of schedule_modes
  std::vector<ScheduleMode> schedule_modes{ScheduleMode::Accelerated};
  double oracle_tol = 1e-10;
  int oracle_max_iters = 2'000'000;
  std::size_t decay_trials = 5;
  std::size_t decay_rounds = 60;
};

std::vector<std::string> builtin_scenario_names();
ScenarioConfig builtin_scenario(const std::string& name);

nlohmann::json to_json(const ScenarioConfig& cfg);
// Strict: unknown keys and wrong types raise ConfigError. A "base" key names
// a built-in scenario whose fields the remaining keys override.
ScenarioConfig scenario_from_json(const nlohmann::json& j);
// A built-in name or a path to a JSON file.
ScenarioConfig load_scenario(const std::string& name_or_path);

// BLAKE2b-256 of the canonical JSON (sorted keys, output_dir excluded), hex.
std::string config_hash(const ScenarioConfig& cfg);
std::string blake2b_hex(const std::string& data);

// Keyed BLAKE2b derivation; one 64-bit seed per label.
std::uint64_t derive_seed(std::uint64_t master, const std::string& label);
std::vector<std::uint64_t> seed_split(std::uint64_t master, const std::vector<std::string>& labels);

struct ReplicationInputs {
  ProblemInstance problem;
  GraphSequence graphs;
  std::uint64_t instance_seed = 0;
  std::uint64_t graph_seed = 0;
  std::uint64_t init_seed = 0;
};

ReplicationInputs build_replication(const ScenarioConfig& cfg, std::size_t r);

// Write to a temporary sibling, then rename.
void write_atomic(const std::filesystem::path& path, const std::string& content);

// Loads <cache_dir>/<instance hash + tolerance>.json or solves and stores it.
// Throws OracleNotConverged when the residual stays above the tolerance.
OracleSolution cached_oracle(const ProblemInstance& problem, const std::filesystem::path& cache_dir, double tol,
                             int max_iters);

struct BoundViolation {
  std::size_t replication = 0;
  std::size_t k = 0;
  std::string check;  // "ergodic", "iterate", "lower"
  double value = 0.0;
  double limit = 0.0;
};

// Checks every logged row with k >= 1 of an accelerated run.
std::vector<BoundViolation> check_trace_bounds(const MetricTrace& trace, std::size_t replication, bool time_varying);

struct ModeResult {
  ScheduleMode mode = ScheduleMode::Accelerated;
  std::vector<MetricTrace> traces;
  AveragedTrace averaged;
  std::vector<BoundViolation> violations;
  bool bounds_checked = false;
};

struct ScenarioResult {
  std::string config_hash;
  std::vector<ModeResult> modes;
  nlohmann::json summary;
};

// Runs every schedule mode over all replications, writes the averaged and
// per-replication CSV files and summary.json under output_dir/name.
ScenarioResult run_scenario(const ScenarioConfig& cfg, std::size_t jobs, bool write_files = true);

// First line of every CSV artifact.
std::string provenance_line(const ScenarioConfig& cfg);

}  // namespace dpda
