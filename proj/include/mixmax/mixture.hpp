#pragma once

#include <functional>
#include <span>
#include <vector>

#include "mixmax/losses.hpp"
#include "mixmax/simplex.hpp"

namespace mixmax {

using Covariate = std::vector<double>;

/// One labeled example. Sequence data has an empty covariate and a
/// TokenSequence target.
struct Sample {
  Covariate x;
  Target y;
};

using SampleCollection = std::vector<Sample>;

enum class ShiftMode { no_shift, covariate_shift };

/// Per-group predictor f_p and optional covariate density p(x).
///
/// Discriminative predictors read only `sample.x`. Generative (sequence)
/// predictors treat the covariate space as a singleton and report the
/// likelihood of `sample.y`.
struct GroupOracle {
  std::function<PredictionOutput(const Sample&)> predict;
  std::function<double(const Covariate&)> density;

  bool has_density() const { return static_cast<bool>(density); }
};

class GroupOracleSet {
 public:
  /// Throws DomainError when covariate_shift is requested and some oracle has
  /// no density, or when an oracle has no predictor.
  GroupOracleSet(std::vector<GroupOracle> oracles, ShiftMode mode);

  std::size_t size() const { return oracles_.size(); }
  ShiftMode mode() const { return mode_; }
  const GroupOracle& operator[](std::size_t p) const { return oracles_[p]; }

 private:
  std::vector<GroupOracle> oracles_;
  ShiftMode mode_;
};

/// f_lambda at one sample. no_shift: sum_p w_p f_p. covariate_shift:
/// sum_p w_p p(x) f_p / sum_p w_p p(x). Throws DegeneratePointError when the
/// mixture density vanishes at x.
PredictionOutput mixture_predict(const MixtureWeights& weights, const GroupOracleSet& oracles,
                                 const Sample& sample);

/// Raw partials d f_lambda / d w_q for every group q (one output-sized vector
/// each). No projection onto the simplex tangent space is applied.
std::vector<std::vector<double>> mixture_predict_gradient(const MixtureWeights& weights,
                                                          const GroupOracleSet& oracles, const Sample& sample);

/// sum_p w_p p(x). Only defined in covariate_shift mode.
double mixture_density(const MixtureWeights& weights, const GroupOracleSet& oracles, const Covariate& x);

// Unchecked kernels over cached oracle evaluations: `outputs` holds K rows of
// `arity` coordinates, `densities` K entries (ignored in no_shift mode).
namespace kernel {

/// Writes f_lambda into `mixed` and returns the normalizer (sum_p w_p p(x) in
/// covariate_shift mode, 1 otherwise).
double mix(std::span<const double> weights, std::span<const double> outputs, std::span<const double> densities,
           ShiftMode mode, std::span<double> mixed);

/// <direction, d f_lambda / d w_q> for every q, written into `out` (length K).
void directional_partials(std::span<const double> weights, std::span<const double> outputs,
                          std::span<const double> densities, ShiftMode mode, std::span<const double> mixed,
                          double normalizer, std::span<const double> direction, std::span<double> out);

}  // namespace kernel

}  // namespace mixmax
