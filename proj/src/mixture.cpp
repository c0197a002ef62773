#include "mixmax/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "mixmax/error.hpp"

namespace mixmax {

GroupOracleSet::GroupOracleSet(std::vector<GroupOracle> oracles, ShiftMode mode)
    : oracles_(std::move(oracles)), mode_(mode) {
  if (oracles_.empty()) throw DimensionError("oracle set needs at least one group");
  for (const auto& oracle : oracles_) {
    if (!oracle.predict) throw DomainError("group oracle has no predictor");
    if (mode_ == ShiftMode::covariate_shift && !oracle.has_density()) {
      throw DomainError("covariate-shift mode requires a density for every group");
    }
  }
}

namespace {

std::string describe(const Covariate& x) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
  os << ')';
  return os.str();
}

struct Evaluated {
  OutputKind kind;
  std::size_t arity;
  std::vector<double> outputs;
  std::vector<double> densities;
};

Evaluated evaluate_oracles(const MixtureWeights& weights, const GroupOracleSet& oracles, const Sample& sample) {
  const std::size_t k = oracles.size();
  if (weights.size() != k) {
    throw DimensionError("weights have " + std::to_string(weights.size()) + " entries for " + std::to_string(k) +
                         " groups");
  }
  Evaluated ev{};
  ev.densities.assign(k, 1.0);
  for (std::size_t p = 0; p < k; ++p) {
    const PredictionOutput out = oracles[p].predict(sample);
    if (p == 0) {
      ev.kind = out.kind();
      ev.arity = out.arity();
      ev.outputs.reserve(k * ev.arity);
    } else if (out.kind() != ev.kind || out.arity() != ev.arity) {
      throw DimensionError("group oracles disagree on output kind or arity");
    }
    ev.outputs.insert(ev.outputs.end(), out.values().begin(), out.values().end());
    if (oracles.mode() == ShiftMode::covariate_shift) {
      const double d = oracles[p].density(sample.x);
      if (!(d >= 0.0) || !std::isfinite(d)) throw DomainError("group density must be finite and nonnegative");
      ev.densities[p] = d;
    }
  }
  if (oracles.mode() == ShiftMode::covariate_shift) {
    double total = 0.0;
    for (std::size_t p = 0; p < k; ++p) total += weights[p] * ev.densities[p];
    if (!(total > 0.0)) {
      throw DegeneratePointError("mixture density vanishes at x = " + describe(sample.x));
    }
  }
  return ev;
}

PredictionOutput wrap(OutputKind kind, std::vector<double> values) {
  switch (kind) {
    case OutputKind::probabilities:
      return PredictionOutput::probabilities(std::move(values));
    case OutputKind::likelihood:
      return PredictionOutput::likelihood(values[0]);
    case OutputKind::regression:
      break;
  }
  return PredictionOutput::regression(std::move(values));
}

}  // namespace

PredictionOutput mixture_predict(const MixtureWeights& weights, const GroupOracleSet& oracles,
                                 const Sample& sample) {
  const Evaluated ev = evaluate_oracles(weights, oracles, sample);
  std::vector<double> mixed(ev.arity);
  kernel::mix(weights.values(), ev.outputs, ev.densities, oracles.mode(), mixed);
  if (ev.kind == OutputKind::probabilities) {
    // Rounding can push a coordinate a hair outside [0, 1].
    for (double& v : mixed) v = std::clamp(v, 0.0, 1.0);
  }
  return wrap(ev.kind, std::move(mixed));
}

std::vector<std::vector<double>> mixture_predict_gradient(const MixtureWeights& weights,
                                                          const GroupOracleSet& oracles, const Sample& sample) {
  const Evaluated ev = evaluate_oracles(weights, oracles, sample);
  const std::size_t k = oracles.size();
  std::vector<double> mixed(ev.arity);
  const double normalizer = kernel::mix(weights.values(), ev.outputs, ev.densities, oracles.mode(), mixed);

  std::vector<std::vector<double>> partials(k, std::vector<double>(ev.arity));
  for (std::size_t q = 0; q < k; ++q) {
    for (std::size_t j = 0; j < ev.arity; ++j) {
      const double fq = ev.outputs[q * ev.arity + j];
      partials[q][j] = oracles.mode() == ShiftMode::no_shift ? fq : ev.densities[q] * (fq - mixed[j]) / normalizer;
    }
  }
  return partials;
}

double mixture_density(const MixtureWeights& weights, const GroupOracleSet& oracles, const Covariate& x) {
  if (oracles.mode() != ShiftMode::covariate_shift) {
    throw DomainError("mixture density is only defined in covariate-shift mode");
  }
  if (weights.size() != oracles.size()) throw DimensionError("weights and oracle set differ in group count");
  double total = 0.0;
  for (std::size_t p = 0; p < oracles.size(); ++p) {
    const double d = oracles[p].density(x);
    if (!(d >= 0.0) || !std::isfinite(d)) throw DomainError("group density must be finite and nonnegative");
    total += weights[p] * d;
  }
  return total;
}

namespace kernel {

double mix(std::span<const double> weights, std::span<const double> outputs, std::span<const double> densities,
           ShiftMode mode, std::span<double> mixed) {
  const std::size_t k = weights.size();
  const std::size_t m = mixed.size();
  std::fill(mixed.begin(), mixed.end(), 0.0);
  double normalizer = 1.0;
  if (mode == ShiftMode::covariate_shift) {
    normalizer = 0.0;
    for (std::size_t p = 0; p < k; ++p) normalizer += weights[p] * densities[p];
  }
  for (std::size_t p = 0; p < k; ++p) {
    const double w = mode == ShiftMode::covariate_shift ? weights[p] * densities[p] / normalizer : weights[p];
    if (w == 0.0) continue;
    for (std::size_t j = 0; j < m; ++j) mixed[j] += w * outputs[p * m + j];
  }
  return normalizer;
}

void directional_partials(std::span<const double> weights, std::span<const double> outputs,
                          std::span<const double> densities, ShiftMode mode, std::span<const double> mixed,
                          double normalizer, std::span<const double> direction, std::span<double> out) {
  const std::size_t k = weights.size();
  const std::size_t m = mixed.size();
  double along_mixed = 0.0;
  if (mode == ShiftMode::covariate_shift) {
    for (std::size_t j = 0; j < m; ++j) along_mixed += direction[j] * mixed[j];
  }
  for (std::size_t q = 0; q < k; ++q) {
    double along = 0.0;
    for (std::size_t j = 0; j < m; ++j) along += direction[j] * outputs[q * m + j];
    out[q] = mode == ShiftMode::no_shift ? along : densities[q] * (along - along_mixed) / normalizer;
  }
}

}  // namespace kernel

}  // namespace mixmax
