#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mixmax/objective.hpp"
#include "mixmax/simplex.hpp"

namespace mixmax {

struct SolverConfig {
  double step_size = 2.0;
  std::size_t steps = 10;
  std::optional<std::size_t> batch_size;  // absent: full-data gradients
  double convergence_tol = 0.01;          // on |objective_i - objective_{i-1}|
  bool early_stop = false;                // stop at the first converged step
  std::uint64_t seed = 0;

  /// Throws DomainError on a nonpositive step size, zero steps, a zero batch
  /// size or a negative tolerance.
  void validate() const;
};

struct TrajectoryPoint {
  std::size_t step = 0;
  MixtureWeights weights;
  double objective = 0.0;
  double gradient_norm = 0.0;  // Euclidean norm of the full-data gradient at `weights`
};

struct SolveReport {
  MixtureWeights final_weights;
  std::vector<TrajectoryPoint> trajectory;  // step 0 is the initial point
  bool converged = false;
  std::optional<std::size_t> converged_at;
  std::size_t steps_taken = 0;
  double final_change = 0.0;  // |objective_n - objective_{n-1}|
  std::map<std::string, std::string> tags;

  double final_objective() const { return trajectory.back().objective; }
};

/// Entropic mirror ascent on the MixMax objective, starting from `initial`
/// (uniform when absent). Convergence is monitored but iteration continues
/// for `steps` steps unless early_stop is set.
SolveReport solve(const MixMaxProblem& problem, const SolverConfig& config,
                  const std::optional<MixtureWeights>& initial = std::nullopt);

SolveReport solve(const GroupDatasets& data, const GroupOracleSet& oracles, LossKind loss,
                  const SolverConfig& config);

}  // namespace mixmax
