#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "mixmax/error.hpp"
#include "mixmax/verify.hpp"

using namespace mixmax;
using namespace testing;
using doctest::Approx;

namespace {

GroupDatasets toy_data(const ToyProblem& toy, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  GroupDatasets d;
  for (std::size_t g = 0; g < toy.oracles.size(); ++g) d.groups.push_back(toy.sample(g, n, rng));
  return d;
}

std::vector<MarkovChainSpec> chains(std::uint64_t seed, std::size_t k, std::size_t vocab, std::size_t max_length) {
  Rng rng(seed);
  std::vector<MarkovChainSpec> out;
  for (std::size_t g = 0; g < k; ++g) out.push_back(sample_chain(vocab, 1.0, rng, max_length));
  return out;
}

double binomial(std::size_t n, std::size_t k) {
  double r = 1.0;
  for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return r;
}

}  // namespace

TEST_CASE("grid specification") {
  CHECK(GridSpec::for_groups(2).step == 0.01);
  CHECK(GridSpec::for_groups(3).step == 0.01);
  CHECK(GridSpec::for_groups(4).step == 0.05);
  CHECK(GridSpec{3, 0.01}.divisions() == 100);
  CHECK(GridSpec{3, 0.01}.point_count() == 5151);
  CHECK(GridSpec{4, 0.05}.point_count() == static_cast<std::size_t>(binomial(23, 3)));
  CHECK_THROWS_AS(GridSpec({3, 0.03}).validate(), DomainError);
  CHECK_THROWS_AS(GridSpec({3, 0.0}).validate(), DomainError);
  CHECK_THROWS_AS(GridSpec({8, 0.01}).validate(), DomainError);
  CHECK_NOTHROW(GridSpec({3, 0.25}).validate());
}

TEST_CASE("grid search examples") {
  const auto single = chains(1, 1, 3, 4);
  Rng rng(2);
  GroupDatasets d;
  d.groups = {sample_sequences(single[0], 5, rng)};
  const GridResult one = grid_search(d, chains_as_oracles(single), LossKind::cross_entropy, GridSpec{1, 0.01});
  CHECK(one.weights.as_vector() == std::vector<double>{1.0});
  CHECK(one.evaluated == 1);

  const ToyProblem mirror = toy_oracles(ToyFamily::binary_cosine, "mirror");
  const GridResult g = grid_search(toy_data(mirror, 10000, 3), mirror.oracles, LossKind::cross_entropy, GridSpec{2, 0.01});
  CHECK(std::abs(g.weights[0] - 0.5) <= 0.02);
  CHECK(g.evaluated == 101);

  // Identical groups make every grid point optimal; the lexicographically
  // smallest one wins.
  GroupDatasets same;
  same.groups = {d.groups[0], d.groups[0]};
  const GridResult tie = grid_search(same, chains_as_oracles({single[0], single[0]}), LossKind::cross_entropy,
                                     GridSpec{2, 0.25});
  CHECK(tie.weights[0] == 0.0);
  CHECK(tie.weights[1] == 1.0);
}

TEST_CASE("finite differences") {
  const auto c = chains(4, 1, 4, 6);
  Rng rng(5);
  GroupDatasets same;
  const auto s = sample_sequences(c[0], 10, rng);
  same.groups = {s, s, s};
  const auto oracles = chains_as_oracles({c[0], c[0], c[0]});
  const MixMaxProblem identical(same, oracles, LossKind::cross_entropy);
  // The objective is constant along the simplex when every group is the same.
  for (const auto& d : finite_diff_gradient(identical, uniform(3), 1e-5)) CHECK(std::abs(d.value) <= 1e-8);

  const auto three = chains(6, 3, 4, 6);
  GroupDatasets data;
  for (const auto& ch : three) data.groups.push_back(sample_sequences(ch, 10, rng));
  const MixMaxProblem problem(data, chains_as_oracles(three), LossKind::cross_entropy);
  const auto w = MixtureWeights::normalized({0.2, 0.5, 0.3});
  const auto fd = finite_diff_gradient(problem, w, 1e-5);
  REQUIRE(fd.size() == 6);
  for (const auto& a : fd) {
    for (const auto& b : fd) {
      if (a.i == b.j && a.j == b.i) CHECK(a.value == Approx(-b.value).epsilon(1e-12));
    }
  }
  const auto coarse = finite_diff_gradient(problem, w, 1e-4);
  for (std::size_t k = 0; k < fd.size(); ++k) CHECK(relative_error(fd[k].value, coarse[k].value) <= 1e-5);

  const auto analytic = tangent_projections(problem.gradient(w));
  for (std::size_t k = 0; k < fd.size(); ++k) {
    CHECK(analytic[k].i == fd[k].i);
    CHECK(analytic[k].j == fd[k].j);
    CHECK(relative_error(fd[k].value, analytic[k].value) <= 1e-5);
  }

  CHECK_THROWS_AS(finite_diff_gradient(problem, MixtureWeights::normalized({1e-5, 0.5, 0.5}), 1e-5), DomainError);
  CHECK(relative_error(0.0, 0.0) == 0.0);
  CHECK(relative_error(1e-9, 0.0) == Approx(1e-3));
  CHECK(relative_error(2.0, 1.0) == Approx(0.5));
}

TEST_CASE("concavity probe") {
  const auto c = chains(7, 1, 4, 6);
  Rng rng(8);
  const auto s = sample_sequences(c[0], 10, rng);
  GroupDatasets same;
  same.groups = {s, s};
  const MixMaxProblem identical(same, chains_as_oracles({c[0], c[0]}), LossKind::cross_entropy);
  const ConcavityReport flat = concavity_probe(identical, 20, rng);
  CHECK(flat.passed);
  CHECK(std::abs(flat.worst_margin) <= 1e-12);
  CHECK(flat.evaluations == 20 * 9);

  for (const char* variant : {"mirror", "shifted"}) {
    const ToyProblem toy = toy_oracles(ToyFamily::binary_cosine, variant);
    const auto objective = [&](const MixtureWeights& w) {
      return toy_population_objective(toy, w, LossKind::cross_entropy, 2000);
    };
    CHECK(concavity_probe(objective, 2, 30, rng).passed);
  }
  const ToyProblem reg = toy_oracles(ToyFamily::regression_cosine, "a");
  const auto reg_objective = [&](const MixtureWeights& w) {
    return toy_population_objective(reg, w, LossKind::squared_error, 2000);
  };
  CHECK(concavity_probe(reg_objective, 3, 30, rng).passed);

  // A strictly convex function fails.
  const auto convex = [](const MixtureWeights& w) { return w[0] * w[0]; };
  const ConcavityReport bad = concavity_probe(convex, 2, 10, rng);
  CHECK_FALSE(bad.passed);
  CHECK(bad.worst_margin < 0.0);
  REQUIRE(bad.worst_first.has_value());
}

TEST_CASE("random simplex points") {
  Rng rng(9);
  double mean0 = 0.0;
  const int n = 4000;
  for (int t = 0; t < n; ++t) {
    const auto w = random_simplex_point(4, rng);
    double total = 0.0;
    for (double v : w.values()) {
      CHECK(v >= 0.0);
      total += v;
    }
    CHECK(total == Approx(1.0).epsilon(1e-12));
    mean0 += w[0] / n;
  }
  // Dirichlet(1,1,1,1) marginal has mean 1/4 and variance 3/80.
  CHECK(std::abs(mean0 - 0.25) <= 4.0 * std::sqrt(3.0 / 80.0 / n));
}

TEST_CASE("sequence enumeration") {
  const auto c = chains(10, 2, 3, 4);
  std::size_t count = 0;
  std::vector<double> totals(2, 0.0);
  for_each_sequence(c, [&](std::span<const double> p) {
    ++count;
    totals[0] += p[0];
    totals[1] += p[1];
  });
  CHECK(count == 3 + 9 + 27 + 81);
  CHECK(totals[0] == Approx(1.0).epsilon(1e-12));
  CHECK(totals[1] == Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(for_each_sequence(c, [](std::span<const double>) {}, 100), DomainError);

  // Population objective from the enumeration, written out directly.
  const auto w = MixtureWeights::normalized({0.3, 0.7});
  double expected = 0.0;
  for_each_sequence(c, [&](std::span<const double> p) {
    const double mixed = w[0] * p[0] + w[1] * p[1];
    expected += -std::log(mixed) * (w[0] * p[0] + w[1] * p[1]);
  });
  const ObjectiveValue v = population_value(c, w);
  CHECK(v.objective == Approx(expected).epsilon(1e-12));
  CHECK(v.objective == Approx(w[0] * v.group_losses[0] + w[1] * v.group_losses[1]).epsilon(1e-12));
}

TEST_CASE("empirical gradients are unbiased") {
  Rng rng(11);
  const auto c = chains(12, 3, 3, 4);
  const UnbiasednessReport r = unbiasedness_test(c, uniform(3), 400, 10, rng);
  CHECK(r.passed);
  CHECK(r.datasets == 400);
  REQUIRE(r.z_scores.size() == 3);
  for (double z : r.z_scores) CHECK(std::abs(z) <= 3.0);

  const UnbiasednessReport vertex = unbiasedness_test(c, MixtureWeights::vertex(3, 0), 400, 10, rng);
  CHECK(vertex.passed);

  // Identical chains: the mixture equals each chain, so every group loss is
  // the common entropy and each raw partial is L - 1.
  const UnbiasednessReport same = unbiasedness_test({c[0], c[0], c[0]}, uniform(3), 50, 10, rng);
  const ObjectiveValue pop = population_value({c[0], c[0], c[0]}, uniform(3));
  for (double g : same.population_gradient) CHECK(g == Approx(pop.group_losses[0] - 1.0).epsilon(1e-10));
}

TEST_CASE("worst-group evaluation") {
  const ToyProblem mirror = toy_oracles(ToyFamily::binary_cosine, "mirror");
  const GroupDatasets test = toy_data(mirror, 5000, 13);
  const WorstGroupReport balanced = worst_group_eval(uniform(2), test, mirror.oracles, LossKind::cross_entropy);
  for (double l : balanced.group_losses) CHECK(l == Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(balanced.worst == Approx(std::log(2.0)).epsilon(1e-12));
  REQUIRE(balanced.worst_accuracy.has_value());
  CHECK(balanced.group_accuracies.size() == 2);

  const WorstGroupReport vertex =
      worst_group_eval(MixtureWeights::vertex(2, 0), test, mirror.oracles, LossKind::cross_entropy);
  CHECK(vertex.worst > balanced.worst);
  CHECK(vertex.worst_index == 1);
  CHECK(vertex.worst == *std::max_element(vertex.group_losses.begin(), vertex.group_losses.end()));
  CHECK(*vertex.worst_accuracy < 0.5);

  // Swapping the groups together with the weights permutes the losses.
  const ToyProblem shifted = toy_oracles(ToyFamily::binary_cosine, "shifted");
  const GroupDatasets d = toy_data(shifted, 1000, 14);
  GroupDatasets swapped;
  swapped.groups = {d.groups[1], d.groups[0]};
  const GroupOracleSet swapped_oracles({shifted.oracles[1], shifted.oracles[0]}, ShiftMode::no_shift);
  const auto w = MixtureWeights::normalized({0.3, 0.7});
  const auto a = worst_group_eval(w, d, shifted.oracles, LossKind::cross_entropy);
  const auto b = worst_group_eval(MixtureWeights::normalized({0.7, 0.3}), swapped, swapped_oracles, LossKind::cross_entropy);
  CHECK(a.group_losses[0] == Approx(b.group_losses[1]).epsilon(1e-12));
  CHECK(a.group_losses[1] == Approx(b.group_losses[0]).epsilon(1e-12));
  CHECK(a.worst == Approx(b.worst).epsilon(1e-12));

  const auto predictor = [](const Sample&) { return PredictionOutput::probabilities({0.5, 0.5}); };
  const WorstGroupReport coin = worst_group_eval(predictor, test, LossKind::cross_entropy);
  CHECK(coin.worst == Approx(std::log(2.0)));
  CHECK_FALSE(coin.weights.has_value());

  const ToyProblem reg = toy_oracles(ToyFamily::regression_cosine, "b");
  const auto r = worst_group_eval(uniform(3), toy_data(reg, 100, 15), reg.oracles, LossKind::squared_error);
  CHECK_FALSE(r.worst_accuracy.has_value());
  CHECK(r.group_accuracies.empty());
}

TEST_CASE("toy population evaluation") {
  const ToyProblem mirror = toy_oracles(ToyFamily::binary_cosine, "mirror");
  const WorstGroupReport half = toy_population_eval(mirror, uniform(2), LossKind::cross_entropy);
  CHECK(half.worst == Approx(std::log(2.0)).epsilon(1e-12));

  // Regression b at (0, 1/2, 1/2): the mixture predicts 0.45 everywhere, so
  // the constant groups lose 0.35^2 and the cosine group 0.02 + 0.05^2.
  const ToyProblem reg = toy_oracles(ToyFamily::regression_cosine, "b");
  const WorstGroupReport r = toy_population_eval(reg, MixtureWeights::from_values({0.0, 0.5, 0.5}), LossKind::squared_error);
  CHECK(r.group_losses[1] == Approx(0.1225).epsilon(1e-9));
  CHECK(r.group_losses[2] == Approx(0.1225).epsilon(1e-9));
  CHECK(r.group_losses[0] == Approx(0.02 + 0.0025).epsilon(1e-6));
  CHECK(toy_population_objective(reg, MixtureWeights::from_values({0.0, 0.5, 0.5}), LossKind::squared_error) ==
        Approx(0.1225).epsilon(1e-9));

  // Empirical losses converge to the quadrature.
  const ToyProblem shifted = toy_oracles(ToyFamily::binary_cosine, "shifted");
  const auto w = MixtureWeights::normalized({0.4, 0.6});
  const auto pop = toy_population_eval(shifted, w, LossKind::cross_entropy);
  const auto emp = worst_group_eval(w, toy_data(shifted, 100000, 16), shifted.oracles, LossKind::cross_entropy);
  for (std::size_t g = 0; g < 2; ++g) CHECK(std::abs(pop.group_losses[g] - emp.group_losses[g]) <= 0.01);
}
