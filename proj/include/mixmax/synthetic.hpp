#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "mixmax/losses.hpp"
#include "mixmax/mixture.hpp"
#include "mixmax/random.hpp"

namespace mixmax {

/// First-order Markov chain over tokens 0..V-1 with a uniform prior over
/// sequence lengths 1..max_length.
///
/// The modeled probability of a sequence includes the length prior:
/// p(s) = (1 / max_length) * initial(s_0) * prod_t T(s_{t-1}, s_t).
class MarkovChainSpec {
 public:
  /// `transition` is row-major V x V. Every row and `initial` must be on the
  /// simplex within 1e-12; V >= 2, max_length >= 1.
  MarkovChainSpec(std::size_t vocab, std::vector<double> transition, std::vector<double> initial,
                  std::size_t max_length);

  std::size_t vocab() const { return vocab_; }
  std::size_t max_length() const { return max_length_; }
  double transition(std::size_t from, std::size_t to) const { return transition_[from * vocab_ + to]; }
  std::span<const double> transition_row(std::size_t from) const {
    return {transition_.data() + from * vocab_, vocab_};
  }
  double initial(std::size_t token) const { return initial_[token]; }
  std::span<const double> initial_distribution() const { return initial_; }

 private:
  std::size_t vocab_;
  std::vector<double> transition_;
  std::vector<double> initial_;
  std::size_t max_length_;
};

/// Rows drawn independently from a symmetric Dirichlet(magnitude); the
/// initial distribution is uniform.
MarkovChainSpec sample_chain(std::size_t vocab, double magnitude, Rng& rng, std::size_t max_length = 10);

double sequence_log_prob(const MarkovChainSpec& chain, const TokenSequence& sequence);

/// Exactly `per_length` sequences of every length 1..max_length, ordered by
/// length. Samples carry an empty covariate and the sequence as target.
SampleCollection sample_sequences(const MarkovChainSpec& chain, std::size_t per_length, Rng& rng);

/// Oracle reporting the exact sequence likelihood of each sample's target.
GroupOracle chain_as_oracle(MarkovChainSpec chain);

/// One oracle per chain, in no_shift mode (sequences have no covariate).
GroupOracleSet chains_as_oracles(const std::vector<MarkovChainSpec>& chains);

nlohmann::json to_json(const MarkovChainSpec& chain);
MarkovChainSpec chain_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// One-dimensional cosine toys with x ~ U[0, 1].

enum class ToyFamily { binary_cosine, regression_cosine };

/// binary_cosine: P(y=1|x) is amplitude*cos(pi x) + offset for group 0 and
/// -amplitude*cos(pi (x - phase_shift)) + offset for group 1.
/// regression_cosine: group 0 predicts amplitude*cos(pi x) + offset, group
/// 1 + i predicts constants[i]; targets are deterministic.
///
/// Covariates of group g have density 1 + s_g * covariate_tilt * (2x - 1) on
/// [0, 1], with s_g = +1 for even g and -1 for odd g. The named presets use
/// no tilt (every group uniform).
struct ToySpec {
  ToyFamily family = ToyFamily::binary_cosine;
  double amplitude = 0.5;
  double offset = 0.5;
  double phase_shift = 0.0;
  std::vector<double> constants;
  double covariate_tilt = 0.0;  // in [0, 1)

  std::size_t group_count() const {
    return family == ToyFamily::binary_cosine ? 2 : 1 + constants.size();
  }
};

/// Named presets: "mirror", "shifted" (binary) and "a" (constants 0.1, 0.15),
/// "b" (constants 0.1, 0.8) (regression). Throws DomainError otherwise.
ToySpec toy_spec(ToyFamily family, std::string_view variant);

/// P(y=1|x) for binary toys, the deterministic target for regression toys.
double toy_conditional(const ToySpec& spec, std::size_t group, double x);

/// Covariate density of `group` at x (zero outside [0, 1]).
double toy_density(const ToySpec& spec, std::size_t group, double x);

struct ToyProblem {
  ToySpec spec;
  GroupOracleSet oracles;
  std::function<SampleCollection(std::size_t group, std::size_t n, Rng& rng)> sample;
};

/// Exact predictors and covariate densities, plus a sampler per group.
ToyProblem toy_oracles(const ToySpec& spec, ShiftMode mode = ShiftMode::no_shift);
ToyProblem toy_oracles(ToyFamily family, std::string_view variant, ShiftMode mode = ShiftMode::no_shift);

}  // namespace mixmax
