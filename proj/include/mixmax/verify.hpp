#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "mixmax/objective.hpp"
#include "mixmax/random.hpp"
#include "mixmax/simplex.hpp"
#include "mixmax/synthetic.hpp"

namespace mixmax {

// ---------------------------------------------------------------------------
// Exhaustive simplex search

struct GridSpec {
  std::size_t groups = 1;
  double step = 0.01;

  /// 0.01 for up to three groups, 0.05 beyond.
  static GridSpec for_groups(std::size_t groups);

  std::size_t divisions() const;   // 1 / step
  std::size_t point_count() const;  // C(divisions + groups - 1, groups - 1)
  void validate() const;            // step must divide 1 within 1e-9; at most 1e6 points
};

struct GridResult {
  MixtureWeights weights;
  double objective = 0.0;
  std::size_t evaluated = 0;
};

/// Evaluates the objective at every grid point of the simplex and returns the
/// lexicographically smallest maximizer.
GridResult grid_search(const MixMaxProblem& problem, const GridSpec& grid);
GridResult grid_search(const GroupDatasets& data, const GroupOracleSet& oracles, LossKind loss,
                       const GridSpec& grid);

// ---------------------------------------------------------------------------
// Finite differences along simplex tangents

/// Directional derivative along (e_i - e_j) / sqrt(2).
struct TangentDerivative {
  std::size_t i = 0;
  std::size_t j = 0;
  double value = 0.0;
};

/// Central differences of the objective along (e_i - e_j)/sqrt(2) for every
/// ordered pair i != j. Requires every weight >= 10 h.
std::vector<TangentDerivative> finite_diff_gradient(const MixMaxProblem& problem, const MixtureWeights& weights,
                                                    double h);
std::vector<TangentDerivative> finite_diff_gradient(const MixtureWeights& weights, const GroupDatasets& data,
                                                    const GroupOracleSet& oracles, LossKind loss, double h);

/// (g_i - g_j) / sqrt(2) for the same pairs as finite_diff_gradient.
std::vector<TangentDerivative> tangent_projections(std::span<const double> gradient);

/// |a - b| / max(|a|, |b|, 1e-6); the floor keeps derivatives that vanish
/// by symmetry from dividing by zero.
double relative_error(double a, double b);

// ---------------------------------------------------------------------------
// Concavity

struct ConcavityReport {
  bool passed = false;
  double worst_margin = 0.0;  // min of obj(mix) - a obj(w1) - (1-a) obj(w2)
  std::size_t evaluations = 0;
  std::optional<MixtureWeights> worst_first;
  std::optional<MixtureWeights> worst_second;
  double worst_alpha = 0.0;
};

/// Draws pairs of weights from Dirichlet(1) and checks the concavity
/// inequality at alpha = 0.1, ..., 0.9. Passes iff worst_margin >= -tolerance.
ConcavityReport concavity_probe(const MixMaxProblem& problem, std::size_t trials, Rng& rng,
                                double tolerance = 1e-9);

/// Same probe for any objective over K-group weights (population objectives).
ConcavityReport concavity_probe(const std::function<double(const MixtureWeights&)>& objective, std::size_t k,
                                std::size_t trials, Rng& rng, double tolerance = 1e-9);

/// Uniform draw from the simplex (Dirichlet with all parameters 1).
MixtureWeights random_simplex_point(std::size_t k, Rng& rng);

// ---------------------------------------------------------------------------
// Population quantities of Markov families by enumeration

/// Calls `visit(probabilities)` once for every sequence of length
/// 1..max_length, where probabilities[p] is the sequence probability under
/// chains[p] (length prior included). Throws DomainError when the number of
/// sequences exceeds `limit`.
void for_each_sequence(const std::vector<MarkovChainSpec>& chains,
                       const std::function<void(std::span<const double>)>& visit, std::size_t limit = 5'000'000);

/// Population MixMax objective and gradient (same formulas as the empirical
/// estimator, integrated exactly).
ObjectiveValue population_value(const std::vector<MarkovChainSpec>& chains, const MixtureWeights& weights,
                                double probability_floor = kProbabilityFloor);

struct UnbiasednessReport {
  std::vector<double> population_gradient;
  std::vector<double> mean_gradient;
  std::vector<double> standard_error;
  std::vector<double> z_scores;
  std::size_t datasets = 0;
  bool passed = false;
};

/// Mean EMixMax gradient over freshly sampled datasets versus the enumerated
/// population gradient; passes iff every component is within three standard
/// errors.
UnbiasednessReport unbiasedness_test(const std::vector<MarkovChainSpec>& population, const MixtureWeights& weights,
                                     std::size_t n_datasets, std::size_t per_length, Rng& rng);

// ---------------------------------------------------------------------------
// Worst-group evaluation

struct WorstGroupReport {
  std::vector<double> group_losses;
  double worst = 0.0;
  std::size_t worst_index = 0;
  std::optional<MixtureWeights> weights;
  std::vector<double> group_accuracies;  // label distributions only
  std::optional<double> worst_accuracy;  // minimum over groups
};

WorstGroupReport worst_group_eval(const MixtureWeights& weights, const GroupDatasets& test,
                                  const GroupOracleSet& oracles, LossKind loss);
WorstGroupReport worst_group_eval(const MixtureWeights& weights, const MixMaxProblem& test);

/// Evaluates an arbitrary predictor instead of a mixture.
WorstGroupReport worst_group_eval(const std::function<PredictionOutput(const Sample&)>& predictor,
                                  const GroupDatasets& test, LossKind loss);

/// Exact per-group expected losses of the toy mixture predictor, integrated
/// against each group's covariate density with the composite midpoint rule.
WorstGroupReport toy_population_eval(const ToyProblem& toy, const MixtureWeights& weights, LossKind loss,
                                     std::size_t nodes = 20000);

/// Population objective of a toy (sum_p w_p L_p with the exact losses above).
double toy_population_objective(const ToyProblem& toy, const MixtureWeights& weights, LossKind loss,
                                std::size_t nodes = 20000);

}  // namespace mixmax
