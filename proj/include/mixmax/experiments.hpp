#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "mixmax/estimation.hpp"
#include "mixmax/losses.hpp"
#include "mixmax/mixture.hpp"
#include "mixmax/solver.hpp"

namespace mixmax {

inline constexpr std::string_view kVersion = "0.1.0";

/// Names accepted in the "experiment" field.
const std::vector<std::string>& known_experiments();

struct ExperimentConfig {
  std::string experiment;
  std::uint64_t seed = 0;
  std::size_t trials = 1;

  // Markov families
  std::size_t groups = 3;
  std::size_t vocab = 4;
  std::size_t max_length = 10;
  std::vector<double> magnitudes{1.0};
  std::vector<std::size_t> samples_per_length{800};  // train; only the first is used by markov_magnitudes
  std::size_t test_per_length = 200;
  double proxy_smoothing = 0.5;
  std::vector<SplitPlan> plans;  // one e2mixmax method per plan

  // Toys
  std::size_t samples_per_group = 10000;
  ShiftMode shift_mode = ShiftMode::no_shift;

  SolverConfig solver;
  std::vector<std::string> baselines{"mixmax", "balanced"};
  std::string output = "results";
  std::size_t workers = 1;

  /// Throws DomainError on unknown keys, unknown names or invalid values.
  static ExperimentConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

/// Reads a config file, or the config embedded in a run manifest.
ExperimentConfig load_config(const std::filesystem::path& path);

struct ResultRow {
  double key = 0.0;  // magnitude or samples per length; unused by toys
  std::size_t trial = 0;
  std::string method;
  std::vector<double> weights;
  double objective = 0.0;
  double worst_group_loss = 0.0;
  std::optional<double> worst_group_accuracy;
  std::optional<bool> converged;  // solver methods only
  std::optional<double> final_change;
  std::string status = "ok";

  bool ok() const { return status == "ok"; }
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<ResultRow> rows;  // trial order, then method order
  nlohmann::json seeds;         // one entry per trial
  nlohmann::json artifacts;     // notes, sampled chains and fitted proxies

  std::string csv() const;
  /// Per (key, method): successful trial count, then mean and sample
  /// standard deviation of objective and worst-group loss.
  std::string summary_csv() const;
  nlohmann::json manifest() const;
};

/// Seed of one trial: derive_seed(derive_seed(master, key_index), trial),
/// where key_index enumerates magnitudes or sample sizes (0 for toys).
std::uint64_t trial_seed(std::uint64_t master, std::size_t key_index, std::size_t trial);

/// Runs every trial with `workers` threads (config.workers when 0). Rows come
/// back in deterministic order; a failing method is recorded in its row's
/// status and the run continues.
ExperimentResult run_experiment(const ExperimentConfig& config, std::size_t workers = 0);

struct OutputPaths {
  std::filesystem::path csv;
  std::filesystem::path summary;
  std::filesystem::path manifest;
  std::filesystem::path artifacts;
};

/// Writes <dir>/<experiment>.csv, .summary.csv, .manifest.json and
/// .artifacts.json.
OutputPaths write_outputs(const ExperimentResult& result, const std::filesystem::path& dir);

}  // namespace mixmax
