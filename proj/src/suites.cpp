#include "mixmax/suites.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

#include "mixmax/error.hpp"
#include "mixmax/random.hpp"
#include "mixmax/solver.hpp"
#include "mixmax/synthetic.hpp"
#include "mixmax/verify.hpp"

namespace mixmax {

namespace {

template <class... Args>
std::string fmt(const char* pattern, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

std::vector<MarkovChainSpec> sample_family(std::size_t groups, std::size_t vocab, std::size_t max_length,
                                           double magnitude, Rng& rng) {
  std::vector<MarkovChainSpec> chains;
  for (std::size_t g = 0; g < groups; ++g) chains.push_back(sample_chain(vocab, magnitude, rng, max_length));
  return chains;
}

GroupDatasets sample_datasets(const std::vector<MarkovChainSpec>& chains, std::size_t per_length, Rng& rng) {
  GroupDatasets data;
  for (const auto& c : chains) data.groups.push_back(sample_sequences(c, per_length, rng));
  return data;
}

// Interior point with every weight at least `floor`.
MixtureWeights interior_point(std::size_t k, double floor, Rng& rng) {
  for (;;) {
    MixtureWeights w = random_simplex_point(k, rng);
    const auto v = w.values();
    if (*std::min_element(v.begin(), v.end()) >= floor) return w;
  }
}

struct GradientInstance {
  std::string label;
  GroupDatasets data;
  GroupOracleSet oracles;
  LossKind loss;
};

GradientInstance toy_instance(const ToySpec& spec, ShiftMode mode, LossKind loss, std::size_t n, Rng& rng,
                              std::string label) {
  ToyProblem toy = toy_oracles(spec, mode);
  GroupDatasets data;
  for (std::size_t g = 0; g < spec.group_count(); ++g) data.groups.push_back(toy.sample(g, n, rng));
  return {std::move(label), std::move(data), std::move(toy.oracles), loss};
}

GradientInstance gradient_instance(std::size_t index, const GradientSuiteParams& params, Rng& rng) {
  const std::size_t round = index / 4;
  switch (index % 4) {
    case 0: {
      auto chains = sample_family(3, 4, 10, 1.0, rng);
      auto data = sample_datasets(chains, params.markov_per_length, rng);
      return {"markov", std::move(data), chains_as_oracles(chains), LossKind::cross_entropy};
    }
    case 1: {
      const char* variant = round % 2 == 0 ? "mirror" : "shifted";
      return toy_instance(toy_spec(ToyFamily::binary_cosine, variant), ShiftMode::no_shift, LossKind::cross_entropy,
                          params.toy_samples, rng, std::string("binary ") + variant);
    }
    case 2: {
      ToySpec spec = toy_spec(ToyFamily::binary_cosine, round % 2 == 0 ? "mirror" : "shifted");
      spec.covariate_tilt = 0.5;
      return toy_instance(spec, ShiftMode::covariate_shift, LossKind::cross_entropy, params.toy_samples, rng,
                          "binary covariate-shift");
    }
    default: {
      const char* variant = round % 2 == 0 ? "a" : "b";
      ToySpec spec = toy_spec(ToyFamily::regression_cosine, variant);
      ShiftMode mode = ShiftMode::no_shift;
      if (round % 4 >= 2) {
        spec.covariate_tilt = 0.5;
        mode = ShiftMode::covariate_shift;
      }
      return toy_instance(spec, mode, LossKind::squared_error, params.toy_samples, rng,
                          std::string("regression ") + variant +
                              (mode == ShiftMode::covariate_shift ? " covariate-shift" : ""));
    }
  }
}

}  // namespace

SuiteResult gradient_suite(std::uint64_t seed, const GradientSuiteParams& params) {
  SuiteResult result{"gradients", true, 0.0, "worst relative error", {}};
  Rng rng(seed);
  for (std::size_t t = 0; t < params.pairs; ++t) {
    const GradientInstance inst = gradient_instance(t, params, rng);
    const MixMaxProblem problem(inst.data, inst.oracles, inst.loss);
    const MixtureWeights w = interior_point(problem.group_count(), 1e-3, rng);
    const auto analytic = tangent_projections(problem.gradient(w));
    const auto numeric = finite_diff_gradient(problem, w, params.h);
    double worst = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
      worst = std::max(worst, relative_error(analytic[i].value, numeric[i].value));
    }
    result.worst_margin = std::max(result.worst_margin, worst);
    if (worst > params.tolerance) {
      result.passed = false;
      result.lines.push_back(fmt("pair %zu (%s): relative error %.3g exceeds %.3g", t, inst.label.c_str(), worst,
                                 params.tolerance));
    }
  }
  result.lines.push_back(fmt("%zu pairs, worst relative error %.3g (tolerance %.3g)", params.pairs,
                             result.worst_margin, params.tolerance));
  return result;
}

SuiteResult concavity_suite(std::uint64_t seed, const ConcavitySuiteParams& params) {
  SuiteResult result{"concavity", true, std::numeric_limits<double>::infinity(), "worst concavity margin", {}};
  Rng rng(seed);
  auto record = [&](const std::string& label, const ConcavityReport& report) {
    result.worst_margin = std::min(result.worst_margin, report.worst_margin);
    result.passed = result.passed && report.passed;
    result.lines.push_back(fmt("%-22s %s worst margin %.3g over %zu evaluations", label.c_str(),
                               report.passed ? "pass" : "FAIL", report.worst_margin, report.evaluations));
  };

  const struct {
    ToyFamily family;
    const char* variant;
    LossKind loss;
  } toys[] = {{ToyFamily::binary_cosine, "mirror", LossKind::cross_entropy},
              {ToyFamily::binary_cosine, "shifted", LossKind::cross_entropy},
              {ToyFamily::regression_cosine, "a", LossKind::squared_error},
              {ToyFamily::regression_cosine, "b", LossKind::squared_error}};
  for (const auto& t : toys) {
    const ToyProblem toy = toy_oracles(t.family, t.variant);
    auto objective = [&](const MixtureWeights& w) {
      return toy_population_objective(toy, w, t.loss, params.quadrature_nodes);
    };
    record(std::string("toy ") + t.variant,
           concavity_probe(objective, toy.spec.group_count(), params.trials, rng, params.tolerance));
  }

  const auto chains = sample_family(3, 3, 4, 1.0, rng);
  auto markov = [&](const MixtureWeights& w) { return population_value(chains, w).objective; };
  record("markov V=3 L=4", concavity_probe(markov, chains.size(), params.trials, rng, params.tolerance));
  return result;
}

SuiteResult unbiasedness_suite(std::uint64_t seed, const UnbiasednessSuiteParams& params) {
  SuiteResult result{"unbiasedness", true, 0.0, "largest |z|", {}};
  Rng rng(seed);
  const auto chains = sample_family(params.groups, params.vocab, params.max_length, 1.0, rng);
  const UnbiasednessReport report =
      unbiasedness_test(chains, uniform(params.groups), params.datasets, params.per_length, rng);
  for (std::size_t q = 0; q < report.z_scores.size(); ++q) {
    result.worst_margin = std::max(result.worst_margin, std::abs(report.z_scores[q]));
    result.lines.push_back(fmt("component %zu: population %.6f, mean %.6f, se %.3g, z %.3f", q,
                               report.population_gradient[q], report.mean_gradient[q], report.standard_error[q],
                               report.z_scores[q]));
  }
  result.passed = report.passed;
  return result;
}

SuiteResult oracle_suite(std::uint64_t seed, const OracleSuiteParams& params) {
  SuiteResult result{"oracle", true, 0.0, "worst l1 distance", {}};
  double worst_gap = 0.0;
  for (std::size_t i = 0; i < params.instances; ++i) {
    Rng rng(derive_seed(seed, i));
    const std::size_t k = i % 2 == 0 ? 2 : 3;
    const auto chains = sample_family(k, 4, 10, 1.0, rng);
    const GroupDatasets data = sample_datasets(chains, params.per_length, rng);
    const MixMaxProblem problem(data, chains_as_oracles(chains), LossKind::cross_entropy);

    SolverConfig coarse;
    coarse.step_size = 2.0;
    coarse.steps = 10;
    const SolveReport first = solve(problem, coarse);
    SolverConfig fine;
    fine.step_size = 0.5;
    fine.steps = 100;
    const SolveReport refined = solve(problem, fine, first.final_weights);

    const GridResult grid = grid_search(problem, GridSpec{k, 0.01});
    const double l1 = l1_distance(refined.final_weights, grid.weights);
    const double gap = std::abs(refined.final_objective() - grid.objective);
    result.worst_margin = std::max(result.worst_margin, l1);
    worst_gap = std::max(worst_gap, gap);
    const bool ok = l1 <= params.l1_tolerance && gap <= params.objective_tolerance;
    result.passed = result.passed && ok;
    result.lines.push_back(fmt("instance %zu (K=%zu): l1 %.4f, objective gap %.2e %s", i, k, l1, gap,
                               ok ? "pass" : "FAIL"));
  }
  result.lines.push_back(fmt("worst objective gap %.3g", worst_gap));
  return result;
}

const std::vector<std::string>& known_suites() {
  static const std::vector<std::string> names{"gradients", "concavity", "unbiasedness", "oracle"};
  return names;
}

SuiteResult run_suite(std::string_view name, std::uint64_t seed) {
  if (name == "gradients") return gradient_suite(seed);
  if (name == "concavity") return concavity_suite(seed);
  if (name == "unbiasedness") return unbiasedness_suite(seed);
  if (name == "oracle") return oracle_suite(seed);
  throw DomainError("unknown suite '" + std::string(name) + "'");
}

}  // namespace mixmax
