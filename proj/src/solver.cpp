#include "mixmax/solver.hpp"

#include <cmath>
#include <sstream>

#include "mixmax/error.hpp"

namespace mixmax {

void SolverConfig::validate() const {
  if (!(step_size > 0.0) || !std::isfinite(step_size)) throw DomainError("step size must be positive");
  if (steps == 0) throw DomainError("number of steps must be at least 1");
  if (batch_size && *batch_size == 0) throw DomainError("batch size must be positive");
  if (!(convergence_tol >= 0.0)) throw DomainError("convergence tolerance must be nonnegative");
}

namespace {

double norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

SolveReport solve(const MixMaxProblem& problem, const SolverConfig& config,
                  const std::optional<MixtureWeights>& initial) {
  config.validate();
  MixtureWeights weights = initial.value_or(MixtureWeights::uniform(problem.group_count()));
  if (weights.size() != problem.group_count()) throw DimensionError("initial weights do not match group count");

  Rng rng(config.seed);
  ObjectiveValue current = problem.evaluate(weights, true);

  SolveReport report{weights, {}, false, std::nullopt, 0, 0.0, {}};
  report.trajectory.push_back({0, weights, current.objective, norm(current.gradient)});

  for (std::size_t step = 1; step <= config.steps; ++step) {
    const std::vector<double> direction =
        config.batch_size ? problem.minibatch_gradient(weights, *config.batch_size, rng) : current.gradient;
    weights = mirror_ascent_step(weights, direction, config.step_size);

    const double previous = current.objective;
    try {
      current = problem.evaluate(weights, true);
    } catch (const NumericError&) {
      std::ostringstream os;
      os << "objective became non-finite at step " << step << ", weights (";
      for (std::size_t p = 0; p < weights.size(); ++p) os << (p ? ", " : "") << weights[p];
      os << ')';
      throw NumericError(os.str());
    }
    report.trajectory.push_back({step, weights, current.objective, norm(current.gradient)});
    report.steps_taken = step;
    report.final_change = std::abs(current.objective - previous);
    if (!report.converged && report.final_change <= config.convergence_tol) {
      report.converged = true;
      report.converged_at = step;
      if (config.early_stop) break;
    }
  }
  report.final_weights = weights;
  return report;
}

SolveReport solve(const GroupDatasets& data, const GroupOracleSet& oracles, LossKind loss,
                  const SolverConfig& config) {
  return solve(MixMaxProblem(data, oracles, loss), config);
}

}  // namespace mixmax
