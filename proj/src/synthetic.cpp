#include "mixmax/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "mixmax/error.hpp"

namespace mixmax {

namespace {

// Entries are kept as given so a chain survives a JSON round trip bit for bit.
void check_distribution(std::span<const double> probs, const char* what) {
  double total = 0.0;
  for (double p : probs) {
    if (!std::isfinite(p) || p < 0.0) throw DomainError(std::string(what) + " has a negative or non-finite entry");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw DomainError(std::string(what) + " sums to " + std::to_string(total) + ", expected 1");
  }
}

std::size_t sample_categorical(std::span<const double> probs, Rng& rng) {
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double cumulative = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    cumulative += probs[i];
    if (u < cumulative) return i;
  }
  // u landed in the rounding gap above the last partial sum
  for (std::size_t i = probs.size(); i-- > 0;) {
    if (probs[i] > 0.0) return i;
  }
  return probs.size() - 1;
}

std::vector<double> sample_dirichlet(std::size_t n, double magnitude, Rng& rng) {
  std::gamma_distribution<double> gamma(magnitude, 1.0);
  std::vector<double> v(n);
  double total = 0.0;
  do {
    total = 0.0;
    for (double& x : v) {
      x = gamma(rng);
      total += x;
    }
  } while (!(total > 0.0));
  for (double& x : v) x /= total;
  return v;
}

}  // namespace

MarkovChainSpec::MarkovChainSpec(std::size_t vocab, std::vector<double> transition, std::vector<double> initial,
                                 std::size_t max_length)
    : vocab_(vocab), transition_(std::move(transition)), initial_(std::move(initial)), max_length_(max_length) {
  if (vocab_ < 2) throw DomainError("Markov chain vocabulary needs at least two tokens");
  if (max_length_ < 1) throw DomainError("maximum sequence length must be at least 1");
  if (transition_.size() != vocab_ * vocab_) throw DimensionError("transition matrix must be V x V");
  if (initial_.size() != vocab_) throw DimensionError("initial distribution must have V entries");
  for (std::size_t i = 0; i < vocab_; ++i) {
    check_distribution(std::span<const double>(transition_.data() + i * vocab_, vocab_), "transition row");
  }
  check_distribution(initial_, "initial distribution");
}

MarkovChainSpec sample_chain(std::size_t vocab, double magnitude, Rng& rng, std::size_t max_length) {
  if (vocab < 2) throw DomainError("Markov chain vocabulary needs at least two tokens");
  if (!(magnitude > 0.0) || !std::isfinite(magnitude)) throw DomainError("Dirichlet magnitude must be positive");
  std::vector<double> transition;
  transition.reserve(vocab * vocab);
  for (std::size_t i = 0; i < vocab; ++i) {
    const std::vector<double> row = sample_dirichlet(vocab, magnitude, rng);
    transition.insert(transition.end(), row.begin(), row.end());
  }
  return MarkovChainSpec(vocab, std::move(transition), std::vector<double>(vocab, 1.0 / static_cast<double>(vocab)),
                         max_length);
}

double sequence_log_prob(const MarkovChainSpec& chain, const TokenSequence& sequence) {
  if (sequence.empty() || sequence.size() > chain.max_length()) {
    throw DomainError("sequence length " + std::to_string(sequence.size()) + " outside 1.." +
                      std::to_string(chain.max_length()));
  }
  for (int token : sequence) {
    if (token < 0 || static_cast<std::size_t>(token) >= chain.vocab()) {
      throw DomainError("token " + std::to_string(token) + " outside vocabulary");
    }
  }
  double log_prob = -std::log(static_cast<double>(chain.max_length()));
  log_prob += std::log(chain.initial(static_cast<std::size_t>(sequence[0])));
  for (std::size_t t = 1; t < sequence.size(); ++t) {
    log_prob += std::log(chain.transition(static_cast<std::size_t>(sequence[t - 1]),
                                          static_cast<std::size_t>(sequence[t])));
  }
  return log_prob;
}

SampleCollection sample_sequences(const MarkovChainSpec& chain, std::size_t per_length, Rng& rng) {
  if (per_length == 0) throw DomainError("need at least one sequence per length");
  SampleCollection samples;
  samples.reserve(per_length * chain.max_length());
  for (std::size_t length = 1; length <= chain.max_length(); ++length) {
    for (std::size_t n = 0; n < per_length; ++n) {
      TokenSequence seq(length);
      seq[0] = static_cast<int>(sample_categorical(chain.initial_distribution(), rng));
      for (std::size_t t = 1; t < length; ++t) {
        seq[t] = static_cast<int>(sample_categorical(chain.transition_row(static_cast<std::size_t>(seq[t - 1])), rng));
      }
      samples.push_back(Sample{{}, std::move(seq)});
    }
  }
  return samples;
}

GroupOracle chain_as_oracle(MarkovChainSpec chain) {
  GroupOracle oracle;
  oracle.predict = [chain = std::move(chain)](const Sample& sample) {
    const auto* seq = std::get_if<TokenSequence>(&sample.y);
    if (seq == nullptr) throw DomainError("Markov chain oracle needs token-sequence targets");
    return PredictionOutput::likelihood(std::exp(sequence_log_prob(chain, *seq)));
  };
  return oracle;
}

GroupOracleSet chains_as_oracles(const std::vector<MarkovChainSpec>& chains) {
  std::vector<GroupOracle> oracles;
  oracles.reserve(chains.size());
  for (const auto& chain : chains) oracles.push_back(chain_as_oracle(chain));
  return GroupOracleSet(std::move(oracles), ShiftMode::no_shift);
}

nlohmann::json to_json(const MarkovChainSpec& chain) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < chain.vocab(); ++i) {
    const auto row = chain.transition_row(i);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  const auto init = chain.initial_distribution();
  return {{"vocab", chain.vocab()},
          {"max_length", chain.max_length()},
          {"initial", std::vector<double>(init.begin(), init.end())},
          {"transition", rows}};
}

MarkovChainSpec chain_from_json(const nlohmann::json& j) {
  const auto vocab = j.at("vocab").get<std::size_t>();
  std::vector<double> transition;
  for (const auto& row : j.at("transition")) {
    const auto values = row.get<std::vector<double>>();
    if (values.size() != vocab) throw DimensionError("transition row of wrong length");
    transition.insert(transition.end(), values.begin(), values.end());
  }
  return MarkovChainSpec(vocab, std::move(transition), j.at("initial").get<std::vector<double>>(),
                         j.at("max_length").get<std::size_t>());
}

ToySpec toy_spec(ToyFamily family, std::string_view variant) {
  if (family == ToyFamily::binary_cosine) {
    if (variant == "mirror") return {ToyFamily::binary_cosine, 0.5, 0.5, 0.0, {}};
    if (variant == "shifted") return {ToyFamily::binary_cosine, 0.5, 0.5, 0.2, {}};
  } else {
    if (variant == "a") return {ToyFamily::regression_cosine, 0.2, 0.5, 0.0, {0.1, 0.15}};
    if (variant == "b") return {ToyFamily::regression_cosine, 0.2, 0.5, 0.0, {0.1, 0.8}};
  }
  throw DomainError("unknown toy variant '" + std::string(variant) + "'");
}

double toy_conditional(const ToySpec& spec, std::size_t group, double x) {
  if (group >= spec.group_count()) throw DimensionError("toy group index out of range");
  constexpr double pi = std::numbers::pi;
  if (spec.family == ToyFamily::binary_cosine) {
    if (group == 0) return spec.amplitude * std::cos(pi * x) + spec.offset;
    return -spec.amplitude * std::cos(pi * (x - spec.phase_shift)) + spec.offset;
  }
  if (group == 0) return spec.amplitude * std::cos(pi * x) + spec.offset;
  return spec.constants[group - 1];
}

double toy_density(const ToySpec& spec, std::size_t group, double x) {
  if (group >= spec.group_count()) throw DimensionError("toy group index out of range");
  if (x < 0.0 || x > 1.0) return 0.0;
  const double sign = group % 2 == 0 ? 1.0 : -1.0;
  return 1.0 + sign * spec.covariate_tilt * (2.0 * x - 1.0);
}

namespace {

// Inverse CDF of the tilted density: F(x) = x + c (x^2 - x) with c = s * tilt.
double sample_tilted(const ToySpec& spec, std::size_t group, double u) {
  const double c = (group % 2 == 0 ? 1.0 : -1.0) * spec.covariate_tilt;
  if (c == 0.0) return u;
  const double b = 1.0 - c;
  return (-b + std::sqrt(b * b + 4.0 * c * u)) / (2.0 * c);
}

}  // namespace

ToyProblem toy_oracles(const ToySpec& spec, ShiftMode mode) {
  if (!(spec.covariate_tilt >= 0.0 && spec.covariate_tilt < 1.0)) {
    throw DomainError("covariate tilt must lie in [0, 1)");
  }
  const std::size_t k = spec.group_count();
  std::vector<GroupOracle> oracles(k);
  for (std::size_t p = 0; p < k; ++p) {
    oracles[p].density = [spec, p](const Covariate& x) { return toy_density(spec, p, x.at(0)); };
    if (spec.family == ToyFamily::binary_cosine) {
      oracles[p].predict = [spec, p](const Sample& s) {
        // Clamping absorbs rounding at the extremes of the cosine.
        const double one = std::clamp(toy_conditional(spec, p, s.x.at(0)), 0.0, 1.0);
        return PredictionOutput::probabilities({1.0 - one, one});
      };
    } else {
      oracles[p].predict = [spec, p](const Sample& s) {
        return PredictionOutput::regression({toy_conditional(spec, p, s.x.at(0))});
      };
    }
  }

  auto sampler = [spec](std::size_t group, std::size_t n, Rng& rng) {
    if (group >= spec.group_count()) throw DimensionError("toy group index out of range");
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    SampleCollection samples;
    samples.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double x = sample_tilted(spec, group, unit(rng));
      const double c = toy_conditional(spec, group, x);
      if (spec.family == ToyFamily::binary_cosine) {
        samples.push_back(Sample{{x}, Label{unit(rng) < c ? 1 : 0}});
      } else {
        samples.push_back(Sample{{x}, RealVector{c}});
      }
    }
    return samples;
  };
  return ToyProblem{spec, GroupOracleSet(std::move(oracles), mode), std::move(sampler)};
}

ToyProblem toy_oracles(ToyFamily family, std::string_view variant, ShiftMode mode) {
  return toy_oracles(toy_spec(family, variant), mode);
}

}  // namespace mixmax
