#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "mixmax/losses.hpp"
#include "mixmax/mixture.hpp"
#include "mixmax/random.hpp"
#include "mixmax/simplex.hpp"

namespace mixmax {

/// Per-group samples D_p, plus optional held-out collections D_p'.
struct GroupDatasets {
  std::vector<SampleCollection> groups;
  std::optional<std::vector<SampleCollection>> heldout;

  std::size_t size() const { return groups.size(); }
};

/// Objective, gradient and per-group mean losses at one weight vector.
struct ObjectiveValue {
  double objective = 0.0;
  std::vector<double> gradient;      // empty unless requested
  std::vector<double> group_losses;  // mean loss of f_lambda on each group
};

/// Empirical MixMax objective sum_p w_p * mean_{D_p} L(f_w(x), y) over fixed
/// datasets and oracles.
///
/// Every oracle is evaluated once per sample at construction; objective and
/// gradient evaluations afterwards only mix the cached outputs, so the
/// oracles must not change while the problem is alive. Summation runs in a
/// fixed order, so results do not depend on thread scheduling.
class MixMaxProblem {
 public:
  MixMaxProblem(const GroupDatasets& data, const GroupOracleSet& oracles, LossKind loss,
                double probability_floor = kProbabilityFloor);

  std::size_t group_count() const { return groups_.size(); }
  std::size_t group_size(std::size_t g) const { return groups_[g].count; }
  LossKind loss() const { return loss_; }
  ShiftMode mode() const { return mode_; }
  OutputKind output_kind() const { return kind_; }

  double objective(const MixtureWeights& weights) const;
  std::vector<double> gradient(const MixtureWeights& weights) const;
  ObjectiveValue evaluate(const MixtureWeights& weights, bool with_gradient = true) const;

  /// Same formulas restricted to `indices[g]` (positions into group g, repeats
  /// allowed). With indices = 0..n_g-1 this reproduces evaluate() bit for bit.
  ObjectiveValue evaluate_subset(const MixtureWeights& weights,
                                 const std::vector<std::vector<std::size_t>>& indices,
                                 bool with_gradient = true) const;

  /// `batch` positions per group, uniform with replacement.
  std::vector<std::vector<std::size_t>> draw_minibatch(std::size_t batch, Rng& rng) const;

  /// Gradient over a freshly drawn minibatch.
  std::vector<double> minibatch_gradient(const MixtureWeights& weights, std::size_t batch, Rng& rng) const;

  std::vector<double> group_losses(const MixtureWeights& weights) const;

  /// Fraction of samples whose most probable label under f_w is the observed
  /// one (ties resolved toward the lower index). Label distributions only.
  std::vector<double> group_accuracies(const MixtureWeights& weights) const;

 private:
  struct GroupCache {
    std::size_t count = 0;
    std::vector<double> outputs;    // count x K x arity
    std::vector<double> densities;  // count x K
    std::vector<int> observed;      // count
    std::vector<double> targets;    // count x arity (regression only)
    std::vector<Covariate> covariates;  // kept for diagnostics in covariate-shift mode
  };

  template <typename IndexRange>
  void accumulate(const MixtureWeights& weights, std::size_t g, const IndexRange& positions, bool with_gradient,
                  double& loss_mean, std::vector<double>& partial_mean) const;

  template <typename RangeForGroup>
  ObjectiveValue combine(const MixtureWeights& weights, RangeForGroup range_for, bool with_gradient) const;

  void check_weights(const MixtureWeights& weights) const;

  std::vector<GroupCache> groups_;
  std::size_t k_ = 0;
  std::size_t arity_ = 0;
  LossKind loss_;
  ShiftMode mode_;
  OutputKind kind_ = OutputKind::probabilities;
  double floor_;
};

double mixmax_objective(const MixtureWeights& weights, const GroupDatasets& data, const GroupOracleSet& oracles,
                        LossKind loss);

/// Exact gradient of mixmax_objective in the weights (raw partials).
std::vector<double> emixmax_gradient(const MixtureWeights& weights, const GroupDatasets& data,
                                     const GroupOracleSet& oracles, LossKind loss);

std::vector<double> minibatch_gradient(const MixtureWeights& weights, const GroupDatasets& data,
                                       const GroupOracleSet& oracles, LossKind loss, std::size_t batch, Rng& rng);

}  // namespace mixmax
