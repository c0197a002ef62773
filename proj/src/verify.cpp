#include "mixmax/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mixmax/error.hpp"

namespace mixmax {

GridSpec GridSpec::for_groups(std::size_t groups) { return {groups, groups <= 3 ? 0.01 : 0.05}; }

std::size_t GridSpec::divisions() const { return static_cast<std::size_t>(std::llround(1.0 / step)); }

std::size_t GridSpec::point_count() const {
  // C(n + k - 1, k - 1), saturating
  const std::size_t n = divisions();
  double count = 1.0;
  for (std::size_t i = 1; i < groups; ++i) {
    count = count * static_cast<double>(n + i) / static_cast<double>(i);
    if (count > 1e18) return std::numeric_limits<std::size_t>::max();
  }
  return static_cast<std::size_t>(std::llround(count));
}

void GridSpec::validate() const {
  if (groups == 0) throw DimensionError("grid needs at least one group");
  if (!(step > 0.0 && step <= 1.0)) throw DomainError("grid step must lie in (0, 1]");
  const double n = 1.0 / step;
  if (std::abs(n - std::round(n)) > 1e-9 * n) throw DomainError("grid step must divide 1");
  if (point_count() > 1'000'000) {
    throw DomainError("grid of " + std::to_string(point_count()) + " points exceeds the 1e6 limit");
  }
}

GridResult grid_search(const MixMaxProblem& problem, const GridSpec& grid) {
  grid.validate();
  const std::size_t k = problem.group_count();
  if (grid.groups != k) throw DimensionError("grid group count does not match the problem");
  const std::size_t n = grid.divisions();

  std::vector<std::size_t> counts(k, 0);
  std::optional<GridResult> best;
  std::size_t evaluated = 0;

  // Visit compositions of n into k parts in increasing lexicographic order so
  // the first strict maximum is the lexicographically smallest maximizer.
  const auto visit = [&](auto&& self, std::size_t index, std::size_t remaining) -> void {
    if (index + 1 == k) {
      counts[index] = remaining;
      std::vector<double> w(k);
      for (std::size_t p = 0; p < k; ++p) w[p] = static_cast<double>(counts[p]) / static_cast<double>(n);
      MixtureWeights weights = MixtureWeights::from_values(std::move(w));
      const double value = problem.objective(weights);
      ++evaluated;
      if (!best || value > best->objective) best = GridResult{std::move(weights), value, 0};
      return;
    }
    for (std::size_t c = 0; c <= remaining; ++c) {
      counts[index] = c;
      self(self, index + 1, remaining - c);
    }
  };
  visit(visit, 0, n);
  best->evaluated = evaluated;
  return *best;
}

GridResult grid_search(const GroupDatasets& data, const GroupOracleSet& oracles, LossKind loss,
                       const GridSpec& grid) {
  return grid_search(MixMaxProblem(data, oracles, loss), grid);
}

std::vector<TangentDerivative> finite_diff_gradient(const MixMaxProblem& problem, const MixtureWeights& weights,
                                                    double h) {
  if (!(h > 0.0)) throw DomainError("finite-difference step must be positive");
  const std::size_t k = weights.size();
  for (std::size_t p = 0; p < k; ++p) {
    if (weights[p] < 10.0 * h) throw DomainError("finite differences need weights at least 10h from the boundary");
  }
  const double t = h / std::sqrt(2.0);
  std::vector<TangentDerivative> out;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      if (i == j) continue;
      std::vector<double> plus = weights.as_vector();
      std::vector<double> minus = weights.as_vector();
      plus[i] += t;
      plus[j] -= t;
      minus[i] -= t;
      minus[j] += t;
      const double f_plus = problem.objective(MixtureWeights::from_values(std::move(plus)));
      const double f_minus = problem.objective(MixtureWeights::from_values(std::move(minus)));
      out.push_back({i, j, (f_plus - f_minus) / (2.0 * h)});
    }
  }
  return out;
}

std::vector<TangentDerivative> finite_diff_gradient(const MixtureWeights& weights, const GroupDatasets& data,
                                                    const GroupOracleSet& oracles, LossKind loss, double h) {
  return finite_diff_gradient(MixMaxProblem(data, oracles, loss), weights, h);
}

std::vector<TangentDerivative> tangent_projections(std::span<const double> gradient) {
  std::vector<TangentDerivative> out;
  for (std::size_t i = 0; i < gradient.size(); ++i) {
    for (std::size_t j = 0; j < gradient.size(); ++j) {
      if (i != j) out.push_back({i, j, (gradient[i] - gradient[j]) / std::sqrt(2.0)});
    }
  }
  return out;
}

double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6});
}

MixtureWeights random_simplex_point(std::size_t k, Rng& rng) {
  std::exponential_distribution<double> expo(1.0);
  std::vector<double> v(k);
  for (double& x : v) x = expo(rng);
  return MixtureWeights::normalized(std::move(v));
}

ConcavityReport concavity_probe(const MixMaxProblem& problem, std::size_t trials, Rng& rng, double tolerance) {
  return concavity_probe([&](const MixtureWeights& w) { return problem.objective(w); }, problem.group_count(),
                         trials, rng, tolerance);
}

ConcavityReport concavity_probe(const std::function<double(const MixtureWeights&)>& objective, std::size_t k,
                                std::size_t trials, Rng& rng, double tolerance) {
  if (trials == 0) throw DomainError("concavity probe needs at least one trial");
  if (k == 0) throw DimensionError("concavity probe needs at least one group");
  ConcavityReport report;
  report.worst_margin = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < trials; ++t) {
    const MixtureWeights first = random_simplex_point(k, rng);
    const MixtureWeights second = random_simplex_point(k, rng);
    const double f_first = objective(first);
    const double f_second = objective(second);
    for (int a = 1; a <= 9; ++a) {
      const double alpha = 0.1 * a;
      std::vector<double> mix(k);
      for (std::size_t p = 0; p < k; ++p) mix[p] = alpha * first[p] + (1.0 - alpha) * second[p];
      const double f_mix = objective(MixtureWeights::normalized(std::move(mix)));
      const double margin = f_mix - alpha * f_first - (1.0 - alpha) * f_second;
      ++report.evaluations;
      if (margin < report.worst_margin) {
        report.worst_margin = margin;
        report.worst_first = first;
        report.worst_second = second;
        report.worst_alpha = alpha;
      }
    }
  }
  report.passed = report.worst_margin >= -tolerance;
  return report;
}

void for_each_sequence(const std::vector<MarkovChainSpec>& chains,
                       const std::function<void(std::span<const double>)>& visit, std::size_t limit) {
  if (chains.empty()) throw DimensionError("need at least one chain");
  const std::size_t vocab = chains[0].vocab();
  const std::size_t max_length = chains[0].max_length();
  for (const auto& c : chains) {
    if (c.vocab() != vocab || c.max_length() != max_length) {
      throw DimensionError("chains disagree on vocabulary or maximum length");
    }
  }
  double total = 0.0;
  double level = 1.0;
  for (std::size_t len = 1; len <= max_length; ++len) {
    level *= static_cast<double>(vocab);
    total += level;
  }
  if (total > static_cast<double>(limit)) {
    throw DomainError("enumerating " + std::to_string(static_cast<long long>(total)) + " sequences exceeds limit");
  }

  const std::size_t k = chains.size();
  const double prior = 1.0 / static_cast<double>(max_length);
  // prefix[depth * k + p]: probability of the current prefix under chain p
  std::vector<double> prefix(max_length * k);
  std::vector<double> emitted(k);
  const auto descend = [&](auto&& self, std::size_t depth, std::size_t last) -> void {
    for (std::size_t p = 0; p < k; ++p) emitted[p] = prior * prefix[depth * k + p];
    visit(emitted);
    if (depth + 1 == max_length) return;
    for (std::size_t next = 0; next < vocab; ++next) {
      for (std::size_t p = 0; p < k; ++p) {
        prefix[(depth + 1) * k + p] = prefix[depth * k + p] * chains[p].transition(last, next);
      }
      self(self, depth + 1, next);
    }
  };
  for (std::size_t first = 0; first < vocab; ++first) {
    for (std::size_t p = 0; p < k; ++p) prefix[p] = chains[p].initial(first);
    descend(descend, 0, first);
  }
}

ObjectiveValue population_value(const std::vector<MarkovChainSpec>& chains, const MixtureWeights& weights,
                                double probability_floor) {
  const std::size_t k = chains.size();
  if (weights.size() != k) throw DimensionError("weights do not match the number of chains");
  std::vector<double> group_loss(k, 0.0);
  std::vector<double> partial(k * k, 0.0);  // partial[g * k + q]
  for_each_sequence(chains, [&](std::span<const double> probs) {
    double mixed = 0.0;
    for (std::size_t p = 0; p < k; ++p) mixed += weights[p] * probs[p];
    const double clamped = std::max(mixed, probability_floor);
    const double loss = -std::log(clamped);
    const double dloss = -1.0 / clamped;
    for (std::size_t g = 0; g < k; ++g) {
      if (probs[g] == 0.0) continue;
      group_loss[g] += probs[g] * loss;
      for (std::size_t q = 0; q < k; ++q) partial[g * k + q] += probs[g] * dloss * probs[q];
    }
  });
  ObjectiveValue value;
  value.group_losses = group_loss;
  value.gradient = group_loss;
  for (std::size_t g = 0; g < k; ++g) {
    value.objective += weights[g] * group_loss[g];
    for (std::size_t q = 0; q < k; ++q) value.gradient[q] += weights[g] * partial[g * k + q];
  }
  return value;
}

UnbiasednessReport unbiasedness_test(const std::vector<MarkovChainSpec>& population, const MixtureWeights& weights,
                                     std::size_t n_datasets, std::size_t per_length, Rng& rng) {
  if (n_datasets < 2) throw DomainError("unbiasedness test needs at least two datasets");
  const std::size_t k = population.size();
  UnbiasednessReport report;
  report.population_gradient = population_value(population, weights).gradient;
  report.datasets = n_datasets;

  const GroupOracleSet oracles = chains_as_oracles(population);
  std::vector<double> mean(k, 0.0);
  std::vector<double> m2(k, 0.0);
  for (std::size_t t = 0; t < n_datasets; ++t) {
    GroupDatasets data;
    for (const auto& chain : population) data.groups.push_back(sample_sequences(chain, per_length, rng));
    const std::vector<double> g = MixMaxProblem(data, oracles, LossKind::cross_entropy).gradient(weights);
    // Welford
    const double n = static_cast<double>(t + 1);
    for (std::size_t q = 0; q < k; ++q) {
      const double delta = g[q] - mean[q];
      mean[q] += delta / n;
      m2[q] += delta * (g[q] - mean[q]);
    }
  }
  report.mean_gradient = mean;
  report.standard_error.resize(k);
  report.z_scores.resize(k);
  report.passed = true;
  for (std::size_t q = 0; q < k; ++q) {
    const double variance = m2[q] / static_cast<double>(n_datasets - 1);
    report.standard_error[q] = std::sqrt(variance / static_cast<double>(n_datasets));
    const double diff = mean[q] - report.population_gradient[q];
    report.z_scores[q] = report.standard_error[q] > 0.0 ? diff / report.standard_error[q] : 0.0;
    const bool within = report.standard_error[q] > 0.0 ? std::abs(report.z_scores[q]) <= 3.0
                                                       : std::abs(diff) <= 1e-12;
    report.passed = report.passed && within;
  }
  return report;
}

namespace {

WorstGroupReport summarize(std::vector<double> losses, std::vector<double> accuracies) {
  WorstGroupReport report;
  report.group_losses = std::move(losses);
  const auto worst = std::max_element(report.group_losses.begin(), report.group_losses.end());
  report.worst = *worst;
  report.worst_index = static_cast<std::size_t>(worst - report.group_losses.begin());
  report.group_accuracies = std::move(accuracies);
  if (!report.group_accuracies.empty()) {
    report.worst_accuracy = *std::min_element(report.group_accuracies.begin(), report.group_accuracies.end());
  }
  return report;
}

}  // namespace

WorstGroupReport worst_group_eval(const MixtureWeights& weights, const MixMaxProblem& test) {
  std::vector<double> accuracies;
  if (test.output_kind() == OutputKind::probabilities) accuracies = test.group_accuracies(weights);
  WorstGroupReport report = summarize(test.group_losses(weights), std::move(accuracies));
  report.weights = weights;
  return report;
}

WorstGroupReport worst_group_eval(const MixtureWeights& weights, const GroupDatasets& test,
                                  const GroupOracleSet& oracles, LossKind loss) {
  return worst_group_eval(weights, MixMaxProblem(test, oracles, loss));
}

WorstGroupReport worst_group_eval(const std::function<PredictionOutput(const Sample&)>& predictor,
                                  const GroupDatasets& test, LossKind loss) {
  if (test.size() == 0) throw DimensionError("need at least one test group");
  std::vector<double> losses;
  std::vector<double> accuracies;
  bool classification = true;
  for (std::size_t g = 0; g < test.size(); ++g) {
    const SampleCollection& samples = test.groups[g];
    if (samples.empty()) throw DomainError("test group " + std::to_string(g) + " is empty");
    double total = 0.0;
    std::size_t correct = 0;
    for (const Sample& s : samples) {
      const PredictionOutput out = predictor(s);
      total += evaluate_loss(loss, out, s.y);
      if (out.kind() == OutputKind::probabilities) {
        const auto values = out.values();
        const auto best = std::max_element(values.begin(), values.end()) - values.begin();
        if (const auto* label = std::get_if<Label>(&s.y); label && label->index == best) ++correct;
      } else {
        classification = false;
      }
    }
    losses.push_back(total / static_cast<double>(samples.size()));
    accuracies.push_back(static_cast<double>(correct) / static_cast<double>(samples.size()));
  }
  if (!classification) accuracies.clear();
  return summarize(std::move(losses), std::move(accuracies));
}

WorstGroupReport toy_population_eval(const ToyProblem& toy, const MixtureWeights& weights, LossKind loss,
                                     std::size_t nodes) {
  const ToySpec& spec = toy.spec;
  const std::size_t k = spec.group_count();
  if (weights.size() != k) throw DimensionError("weights do not match the toy's group count");
  if (nodes == 0) throw DomainError("quadrature needs at least one node");
  const bool binary = spec.family == ToyFamily::binary_cosine;
  if (binary != (loss == LossKind::cross_entropy)) throw DomainError("loss does not match the toy family");

  std::vector<double> losses(k, 0.0);
  std::vector<double> accuracies(k, 0.0);
  std::vector<double> cond(k);
  std::vector<double> dens(k);
  const bool shifted = toy.oracles.mode() == ShiftMode::covariate_shift;
  const double width = 1.0 / static_cast<double>(nodes);
  for (std::size_t n = 0; n < nodes; ++n) {
    const double x = (static_cast<double>(n) + 0.5) * width;
    double normalizer = 0.0;
    for (std::size_t p = 0; p < k; ++p) {
      cond[p] = toy_conditional(spec, p, x);
      if (binary) cond[p] = std::clamp(cond[p], 0.0, 1.0);
      dens[p] = toy_density(spec, p, x);
      normalizer += weights[p] * (shifted ? dens[p] : 1.0);
    }
    double mixed = 0.0;
    for (std::size_t p = 0; p < k; ++p) mixed += weights[p] * (shifted ? dens[p] : 1.0) * cond[p] / normalizer;
    for (std::size_t q = 0; q < k; ++q) {
      const double mass = width * dens[q];
      if (binary) {
        const double one = std::max(mixed, kProbabilityFloor);
        const double zero = std::max(1.0 - mixed, kProbabilityFloor);
        losses[q] += mass * (cond[q] * -std::log(one) + (1.0 - cond[q]) * -std::log(zero));
        accuracies[q] += mass * (mixed > 0.5 ? cond[q] : 1.0 - cond[q]);
      } else {
        losses[q] += mass * (mixed - cond[q]) * (mixed - cond[q]);
      }
    }
  }
  if (!binary) accuracies.clear();
  WorstGroupReport report = summarize(std::move(losses), std::move(accuracies));
  report.weights = weights;
  return report;
}

double toy_population_objective(const ToyProblem& toy, const MixtureWeights& weights, LossKind loss,
                                 std::size_t nodes) {
  const WorstGroupReport r = toy_population_eval(toy, weights, loss, nodes);
  double total = 0.0;
  for (std::size_t p = 0; p < weights.size(); ++p) total += weights[p] * r.group_losses[p];
  return total;
}

}  // namespace mixmax
