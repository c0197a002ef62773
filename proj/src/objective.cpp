#include "mixmax/objective.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ranges>
#include <sstream>
#include <string>

#include "mixmax/error.hpp"

namespace mixmax {

namespace {

int observed_label(OutputKind kind, std::size_t arity, const Target& target) {
  if (kind == OutputKind::likelihood) return 0;
  if (kind == OutputKind::regression) return 0;
  const auto* label = std::get_if<Label>(&target);
  if (label == nullptr) throw DomainError("classification samples need label targets");
  if (label->index < 0 || static_cast<std::size_t>(label->index) >= arity) {
    throw DomainError("label " + std::to_string(label->index) + " outside vocabulary of size " +
                      std::to_string(arity));
  }
  return label->index;
}

}  // namespace

MixMaxProblem::MixMaxProblem(const GroupDatasets& data, const GroupOracleSet& oracles, LossKind loss,
                             double probability_floor)
    : k_(oracles.size()), loss_(loss), mode_(oracles.mode()), floor_(probability_floor) {
  if (data.size() != k_) {
    throw DimensionError("datasets cover " + std::to_string(data.size()) + " groups, oracle set has " +
                         std::to_string(k_));
  }
  bool first = true;
  groups_.resize(k_);
  for (std::size_t g = 0; g < k_; ++g) {
    const SampleCollection& samples = data.groups[g];
    if (samples.empty()) throw DomainError("group " + std::to_string(g) + " has no samples");
    GroupCache& cache = groups_[g];
    cache.count = samples.size();
    cache.densities.assign(cache.count * k_, 1.0);
    cache.observed.reserve(cache.count);
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const Sample& s = samples[i];
      for (std::size_t p = 0; p < k_; ++p) {
        const PredictionOutput out = oracles[p].predict(s);
        if (first) {
          kind_ = out.kind();
          arity_ = out.arity();
          first = false;
          if (loss_ == LossKind::cross_entropy && kind_ == OutputKind::regression) {
            throw DomainError("cross-entropy needs probability or likelihood outputs");
          }
          if (loss_ == LossKind::squared_error && kind_ != OutputKind::regression) {
            throw DomainError("squared error needs regression outputs");
          }
        } else if (out.kind() != kind_ || out.arity() != arity_) {
          throw DimensionError("group oracles disagree on output kind or arity");
        }
        cache.outputs.insert(cache.outputs.end(), out.values().begin(), out.values().end());
        if (mode_ == ShiftMode::covariate_shift) {
          const double d = oracles[p].density(s.x);
          if (!(d >= 0.0) || !std::isfinite(d)) throw DomainError("group density must be finite and nonnegative");
          cache.densities[i * k_ + p] = d;
        }
      }
      cache.observed.push_back(observed_label(kind_, arity_, s.y));
      if (kind_ == OutputKind::regression) {
        const auto* values = std::get_if<RealVector>(&s.y);
        if (values == nullptr || values->size() != arity_) {
          throw DimensionError("regression target arity does not match the oracle outputs");
        }
        cache.targets.insert(cache.targets.end(), values->begin(), values->end());
      }
      if (mode_ == ShiftMode::covariate_shift) cache.covariates.push_back(s.x);
    }
  }
}

void MixMaxProblem::check_weights(const MixtureWeights& weights) const {
  if (weights.size() != k_) {
    throw DimensionError("weights have " + std::to_string(weights.size()) + " entries for " + std::to_string(k_) +
                         " groups");
  }
}

template <typename IndexRange>
void MixMaxProblem::accumulate(const MixtureWeights& weights, std::size_t g, const IndexRange& positions,
                               bool with_gradient, double& loss_mean, std::vector<double>& partial_mean) const {
  const GroupCache& cache = groups_[g];
  std::vector<double> mixed(arity_);
  std::vector<double> loss_grad(arity_);
  std::vector<double> partials(k_);
  double loss_sum = 0.0;
  std::vector<double> partial_sum(k_, 0.0);
  std::size_t n = 0;
  for (std::size_t i : positions) {
    const std::span<const double> outputs(cache.outputs.data() + i * k_ * arity_, k_ * arity_);
    const std::span<const double> densities(cache.densities.data() + i * k_, k_);
    const std::span<const double> target =
        cache.targets.empty() ? std::span<const double>{}
                              : std::span<const double>(cache.targets.data() + i * arity_, arity_);
    const double normalizer = kernel::mix(weights.values(), outputs, densities, mode_, mixed);
    if (mode_ == ShiftMode::covariate_shift && !(normalizer > 0.0)) {
      std::ostringstream os;
      os << "mixture density vanishes at x = (";
      for (std::size_t j = 0; j < cache.covariates[i].size(); ++j) os << (j ? ", " : "") << cache.covariates[i][j];
      os << ") in group " << g;
      throw DegeneratePointError(os.str());
    }
    loss_sum += kernel::loss(loss_, mixed, cache.observed[i], target, floor_);
    if (with_gradient) {
      kernel::loss_gradient(loss_, mixed, cache.observed[i], target, floor_, loss_grad);
      kernel::directional_partials(weights.values(), outputs, densities, mode_, mixed, normalizer, loss_grad,
                                   partials);
      for (std::size_t q = 0; q < k_; ++q) partial_sum[q] += partials[q];
    }
    ++n;
  }
  if (n == 0) throw DomainError("group " + std::to_string(g) + " has no samples to average");
  const double scale = 1.0 / static_cast<double>(n);
  loss_mean = loss_sum * scale;
  partial_mean.assign(k_, 0.0);
  if (with_gradient) {
    for (std::size_t q = 0; q < k_; ++q) partial_mean[q] = partial_sum[q] * scale;
  }
}

template <typename RangeForGroup>
ObjectiveValue MixMaxProblem::combine(const MixtureWeights& weights, RangeForGroup range_for,
                                      bool with_gradient) const {
  ObjectiveValue value;
  value.group_losses.resize(k_);
  std::vector<std::vector<double>> partial_means(k_);
  for (std::size_t g = 0; g < k_; ++g) {
    accumulate(weights, g, range_for(g), with_gradient, value.group_losses[g], partial_means[g]);
  }
  // objective = sum_g w_g L_g, so d/dw_q = L_q + sum_g w_g dL_g/dw_q
  for (std::size_t g = 0; g < k_; ++g) value.objective += weights[g] * value.group_losses[g];
  if (with_gradient) {
    value.gradient = value.group_losses;
    for (std::size_t q = 0; q < k_; ++q) {
      for (std::size_t g = 0; g < k_; ++g) value.gradient[q] += weights[g] * partial_means[g][q];
    }
  }
  if (!std::isfinite(value.objective)) throw NumericError("MixMax objective is not finite");
  return value;
}

ObjectiveValue MixMaxProblem::evaluate(const MixtureWeights& weights, bool with_gradient) const {
  check_weights(weights);
  return combine(
      weights, [this](std::size_t g) { return std::views::iota(std::size_t{0}, groups_[g].count); },
      with_gradient);
}

ObjectiveValue MixMaxProblem::evaluate_subset(const MixtureWeights& weights,
                                              const std::vector<std::vector<std::size_t>>& indices,
                                              bool with_gradient) const {
  check_weights(weights);
  if (indices.size() != k_) throw DimensionError("need one index set per group");
  for (std::size_t g = 0; g < k_; ++g) {
    for (std::size_t i : indices[g]) {
      if (i >= groups_[g].count) throw DomainError("sample index out of range in group " + std::to_string(g));
    }
  }
  return combine(
      weights, [&indices](std::size_t g) -> const std::vector<std::size_t>& { return indices[g]; }, with_gradient);
}

double MixMaxProblem::objective(const MixtureWeights& weights) const { return evaluate(weights, false).objective; }

std::vector<double> MixMaxProblem::gradient(const MixtureWeights& weights) const {
  return evaluate(weights, true).gradient;
}

std::vector<std::vector<std::size_t>> MixMaxProblem::draw_minibatch(std::size_t batch, Rng& rng) const {
  if (batch == 0) throw DomainError("minibatch size must be positive");
  std::vector<std::vector<std::size_t>> indices(k_);
  for (std::size_t g = 0; g < k_; ++g) {
    std::uniform_int_distribution<std::size_t> pick(0, groups_[g].count - 1);
    indices[g].resize(batch);
    for (auto& i : indices[g]) i = pick(rng);
  }
  return indices;
}

std::vector<double> MixMaxProblem::minibatch_gradient(const MixtureWeights& weights, std::size_t batch,
                                                      Rng& rng) const {
  return evaluate_subset(weights, draw_minibatch(batch, rng), true).gradient;
}

std::vector<double> MixMaxProblem::group_losses(const MixtureWeights& weights) const {
  return evaluate(weights, false).group_losses;
}

std::vector<double> MixMaxProblem::group_accuracies(const MixtureWeights& weights) const {
  check_weights(weights);
  if (kind_ != OutputKind::probabilities) throw DomainError("accuracy needs label distributions");
  std::vector<double> accuracies(k_);
  std::vector<double> mixed(arity_);
  for (std::size_t g = 0; g < k_; ++g) {
    const GroupCache& cache = groups_[g];
    std::size_t correct = 0;
    for (std::size_t i = 0; i < cache.count; ++i) {
      kernel::mix(weights.values(), std::span<const double>(cache.outputs.data() + i * k_ * arity_, k_ * arity_),
                  std::span<const double>(cache.densities.data() + i * k_, k_), mode_, mixed);
      const auto best = static_cast<int>(std::max_element(mixed.begin(), mixed.end()) - mixed.begin());
      if (best == cache.observed[i]) ++correct;
    }
    accuracies[g] = static_cast<double>(correct) / static_cast<double>(cache.count);
  }
  return accuracies;
}

double mixmax_objective(const MixtureWeights& weights, const GroupDatasets& data, const GroupOracleSet& oracles,
                        LossKind loss) {
  return MixMaxProblem(data, oracles, loss).objective(weights);
}

std::vector<double> emixmax_gradient(const MixtureWeights& weights, const GroupDatasets& data,
                                     const GroupOracleSet& oracles, LossKind loss) {
  return MixMaxProblem(data, oracles, loss).gradient(weights);
}

std::vector<double> minibatch_gradient(const MixtureWeights& weights, const GroupDatasets& data,
                                       const GroupOracleSet& oracles, LossKind loss, std::size_t batch, Rng& rng) {
  return MixMaxProblem(data, oracles, loss).minibatch_gradient(weights, batch, rng);
}

}  // namespace mixmax
