#pragma once

#include <cstdint>
#include <filesystem>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "nfde/estimates.hpp"

namespace nfde {

// Descriptor kinds: zero | bump {center, width, height} | indicator {interval | box, height}
// | random {seed, amplitude} | scaled {base, factor}.
Vec make_initial(const Domain& d, const json& descriptor);

// {"times": [...]} or {"t_min", "t_max", "samples", "include_zero"}: log-spaced.
std::vector<double> make_times(const json& spec);

extern const std::vector<std::string> kAllChecks;

struct ExperimentConfig {
  std::string name = "run";
  json domain;
  json op;
  json nonlinearity;
  json initial;
  json time;
  StepperConfig stepper;
  std::vector<std::string> checks;
  double pair_factor = 0.5;  // v0 = pair_factor * u0 for the ordered pair
  int random_tests = 2;
  std::uint64_t test_seed = 7;
  Slack slack;
  Slack residual_slack{1e-12, 1.0};  // weak formulation residual: abs_tol + rate * dt * max|g|
  std::string output;  // empty: nothing persisted

  static ExperimentConfig from_json(const json& j);
  static ExperimentConfig load(const std::filesystem::path& p);
  json to_json() const;
  // Canonical key: compact dump of to_json() without the output location.
  std::string key() const;
};

// Operators with identical (domain, operator) configs are built once and shared read-only.
class OperatorCache {
 public:
  std::shared_ptr<const DiscreteOperator> get(const json& domain, const json& op);
  std::size_t size() const;

 private:
  mutable std::mutex mu_;
  std::map<std::string, std::shared_future<std::shared_ptr<const DiscreteOperator>>> entries_;
};

struct ExperimentResult {
  ExperimentConfig config;
  Trajectory trajectory;
  std::vector<CheckReport> reports;
  std::optional<EstimateConstants> constants;
  json series;  // {t, sup, l1, l1_phi}

  bool pass() const;
  json manifest_entry() const;
};

// Builds, evolves, runs checks and persists artifacts under config.output.
ExperimentResult run_experiment(const ExperimentConfig& cfg, OperatorCache* cache = nullptr);

// Repeats the run at dt / 2^j, j = 1..levels; a check is converged when it passes at every level.
ExperimentResult run_experiment_converged(const ExperimentConfig& cfg, int levels, OperatorCache* cache = nullptr);

void write_trajectory_csv(const std::filesystem::path& p, const Domain& d, const Trajectory& tr);
void write_json(const std::filesystem::path& p, const json& j);
json read_json(const std::filesystem::path& p);

// Kernel-bound certification of (K1), (K2) for the configured operator.
json certify_kernels(const ExperimentConfig& cfg, OperatorCache* cache = nullptr);

struct SweepAxis {
  std::string path;  // JSON pointer into the base config, e.g. /operator/s
  std::vector<json> values;
};

struct SweepSpec {
  static constexpr std::size_t kMaxRuns = 256;
  json base;
  std::vector<SweepAxis> axes;
  int parallelism = 0;  // 0: hardware concurrency
  std::string output;

  static SweepSpec from_json(const json& j);
  // Raw configs in deterministic order (sorted by canonical dump), outputs assigned.
  std::vector<json> expand_raw() const;
  // Validated configs; throws on the first invalid point.
  std::vector<ExperimentConfig> expand() const;
};

// Runs every configuration, merges entries sorted by config key and appends a summary.
json run_sweep(const SweepSpec& spec);

// Least-squares slope of log sup against log t over samples in [t_lo, t_hi].
std::optional<double> fit_decay_slope(const json& series, double t_lo, double t_hi);

// Writes SVG plots and their data CSVs; returns the written paths.
std::vector<std::filesystem::path> emit_plots(const json& manifest, const std::filesystem::path& out_dir);

}  // namespace nfde
