#include <cmath>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "mixmax/error.hpp"
#include "mixmax/solver.hpp"
#include "mixmax/synthetic.hpp"
#include "mixmax/verify.hpp"

using namespace mixmax;
using namespace testing;
using doctest::Approx;

namespace {

struct MarkovCase {
  std::vector<MarkovChainSpec> chains;
  GroupDatasets data;
};

MarkovCase markov_case(std::uint64_t seed, std::size_t k, std::size_t per_length) {
  Rng rng(seed);
  MarkovCase c;
  for (std::size_t g = 0; g < k; ++g) c.chains.push_back(sample_chain(4, 1.0, rng, 10));
  for (const auto& chain : c.chains) c.data.groups.push_back(sample_sequences(chain, per_length, rng));
  return c;
}

SolverConfig config(double eta, std::size_t steps) {
  SolverConfig cfg;
  cfg.step_size = eta;
  cfg.steps = steps;
  return cfg;
}

}  // namespace

TEST_CASE("identical groups stay uniform") {
  Rng rng(1);
  const auto chain = sample_chain(4, 1.0, rng, 6);
  const auto samples = sample_sequences(chain, 10, rng);
  GroupDatasets d;
  d.groups = {samples, samples, samples};
  const SolveReport r = solve(d, chains_as_oracles({chain, chain, chain}), LossKind::cross_entropy, config(2.0, 10));
  for (const auto& point : r.trajectory) {
    for (double v : point.weights.values()) CHECK(v == Approx(1.0 / 3.0).epsilon(1e-14));
  }
}

TEST_CASE("mirror toy selects random guessing") {
  const ToyProblem toy = toy_oracles(ToyFamily::binary_cosine, "mirror");
  Rng rng(2);
  GroupDatasets d;
  for (std::size_t g = 0; g < 2; ++g) d.groups.push_back(toy.sample(g, 10000, rng));
  const SolveReport r = solve(d, toy.oracles, LossKind::cross_entropy, config(0.5, 100));
  CHECK(l1_distance(r.final_weights, uniform(2)) <= 0.01);
}

TEST_CASE("ten steps reach the grid optimum on a Markov problem") {
  const MarkovCase c = markov_case(3, 3, 50);
  const MixMaxProblem problem(c.data, chains_as_oracles(c.chains), LossKind::cross_entropy);
  const SolveReport r = solve(problem, config(2.0, 10));
  const GridResult grid = grid_search(problem, GridSpec{3, 0.01});
  CHECK(l1_distance(r.final_weights, grid.weights) <= 0.02);
  CHECK(grid.objective >= r.final_objective() - 1e-3);
}

TEST_CASE("small steps increase the objective monotonically") {
  const MarkovCase c = markov_case(4, 3, 20);
  const MixMaxProblem problem(c.data, chains_as_oracles(c.chains), LossKind::cross_entropy);
  const SolveReport r = solve(problem, config(0.01, 50));
  for (std::size_t i = 1; i < r.trajectory.size(); ++i) {
    CHECK(r.trajectory[i].objective >= r.trajectory[i - 1].objective - 1e-7);
  }

  const ToyProblem toy = toy_oracles(ToyFamily::regression_cosine, "a");
  Rng rng(5);
  GroupDatasets d;
  for (std::size_t g = 0; g < 3; ++g) d.groups.push_back(toy.sample(g, 500, rng));
  const SolveReport rr = solve(d, toy.oracles, LossKind::squared_error, config(0.01, 50));
  for (std::size_t i = 1; i < rr.trajectory.size(); ++i) {
    CHECK(rr.trajectory[i].objective >= rr.trajectory[i - 1].objective - 1e-7);
  }
}

TEST_CASE("standard step counts improve on uniform weights") {
  for (std::uint64_t seed = 10; seed < 15; ++seed) {
    const MarkovCase c = markov_case(seed, 3, 30);
    const MixMaxProblem problem(c.data, chains_as_oracles(c.chains), LossKind::cross_entropy);
    const SolveReport r = solve(problem, config(2.0, 10));
    CHECK(r.final_objective() >= problem.objective(uniform(3)) - 1e-9);
  }
  const ToyProblem toy = toy_oracles(ToyFamily::binary_cosine, "shifted");
  Rng rng(6);
  GroupDatasets d;
  for (std::size_t g = 0; g < 2; ++g) d.groups.push_back(toy.sample(g, 1000, rng));
  const MixMaxProblem problem(d, toy.oracles, LossKind::cross_entropy);
  CHECK(solve(problem, config(0.1, 20)).final_objective() >= problem.objective(uniform(2)) - 1e-9);
}

TEST_CASE("trajectory layout and convergence bookkeeping") {
  const MarkovCase c = markov_case(7, 2, 20);
  const MixMaxProblem problem(c.data, chains_as_oracles(c.chains), LossKind::cross_entropy);
  const SolveReport r = solve(problem, config(2.0, 10));
  REQUIRE(r.trajectory.size() == 11);
  CHECK(r.trajectory.front().step == 0);
  CHECK(r.trajectory.front().weights == uniform(2));
  CHECK(r.steps_taken == 10);
  CHECK(r.final_weights == r.trajectory.back().weights);
  CHECK(r.final_change == Approx(std::abs(r.trajectory[10].objective - r.trajectory[9].objective)));
  if (r.converged) {
    const std::size_t at = *r.converged_at;
    CHECK(std::abs(r.trajectory[at].objective - r.trajectory[at - 1].objective) <= 0.01);
    for (std::size_t i = 1; i < at; ++i) {
      CHECK(std::abs(r.trajectory[i].objective - r.trajectory[i - 1].objective) > 0.01);
    }
  }

  SolverConfig early = config(2.0, 10);
  early.early_stop = true;
  const SolveReport e = solve(problem, early);
  REQUIRE(e.converged);
  CHECK(e.steps_taken == *e.converged_at);
  CHECK(e.trajectory.size() == e.steps_taken + 1);
}

TEST_CASE("never-converging runs report it") {
  const MarkovCase c = markov_case(8, 3, 20);
  const MixMaxProblem problem(c.data, chains_as_oracles(c.chains), LossKind::cross_entropy);
  SolverConfig cfg = config(2.0, 3);
  cfg.convergence_tol = 0.0;
  const SolveReport r = solve(problem, cfg);
  CHECK_FALSE(r.converged);
  CHECK_FALSE(r.converged_at.has_value());
  CHECK(r.steps_taken == 3);
}

TEST_CASE("solves are deterministic") {
  const MarkovCase c = markov_case(9, 3, 20);
  const MixMaxProblem problem(c.data, chains_as_oracles(c.chains), LossKind::cross_entropy);
  SolverConfig cfg = config(1.0, 15);
  cfg.batch_size = 16;
  cfg.seed = 99;
  const SolveReport a = solve(problem, cfg), b = solve(problem, cfg);
  REQUIRE(a.trajectory.size() == b.trajectory.size());
  for (std::size_t i = 0; i < a.trajectory.size(); ++i) {
    CHECK(a.trajectory[i].weights == b.trajectory[i].weights);
    CHECK(a.trajectory[i].objective == b.trajectory[i].objective);
  }
  cfg.seed = 100;
  CHECK_FALSE(solve(problem, cfg).final_weights == a.final_weights);
}

TEST_CASE("solver configuration errors") {
  SolverConfig cfg;
  cfg.step_size = 0.0;
  CHECK_THROWS_AS(cfg.validate(), DomainError);
  cfg = SolverConfig{};
  cfg.steps = 0;
  CHECK_THROWS_AS(cfg.validate(), DomainError);
  cfg = SolverConfig{};
  cfg.batch_size = 0;
  CHECK_THROWS_AS(cfg.validate(), DomainError);
  cfg = SolverConfig{};
  cfg.convergence_tol = -1.0;
  CHECK_THROWS_AS(cfg.validate(), DomainError);

  const MarkovCase c = markov_case(10, 2, 5);
  const MixMaxProblem problem(c.data, chains_as_oracles(c.chains), LossKind::cross_entropy);
  CHECK_THROWS_AS(solve(problem, SolverConfig{}, uniform(3)), DimensionError);
}

TEST_CASE("non-finite objectives abort the solve") {
  const GroupOracleSet set({regression_oracle([](double) { return 1e200; }), regression_oracle([](double) { return 0.0; })},
                           ShiftMode::no_shift);
  GroupDatasets d;
  d.groups = {{valued(0.1, 0.0)}, {valued(0.2, 0.0)}};
  CHECK_THROWS_AS(solve(d, set, LossKind::squared_error, SolverConfig{}), NumericError);
}
