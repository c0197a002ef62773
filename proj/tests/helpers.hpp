#pragma once

// Small oracles and reference computations shared by the unit tests. The
// reference versions are written from the definitions, without the library's
// cached kernels, so they can serve as independent checks.

#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "mixmax/mixture.hpp"
#include "mixmax/objective.hpp"

namespace testing {

using namespace mixmax;

inline GroupOracle binary_oracle(std::function<double(double)> p1,
                                 std::function<double(double)> density = nullptr) {
  GroupOracle o;
  o.predict = [p1](const Sample& s) {
    const double p = p1(s.x.at(0));
    return PredictionOutput::probabilities({1.0 - p, p});
  };
  if (density) o.density = [density](const Covariate& x) { return density(x.at(0)); };
  return o;
}

inline GroupOracle regression_oracle(std::function<double(double)> f,
                                     std::function<double(double)> density = nullptr) {
  GroupOracle o;
  o.predict = [f](const Sample& s) { return PredictionOutput::regression({f(s.x.at(0))}); };
  if (density) o.density = [density](const Covariate& x) { return density(x.at(0)); };
  return o;
}

inline Sample labeled(double x, int y) { return Sample{{x}, Label{y}}; }
inline Sample valued(double x, double y) { return Sample{{x}, RealVector{y}}; }

// f_lambda straight from the definition.
inline std::vector<double> reference_mixture(const std::vector<double>& w, const GroupOracleSet& s,
                                             const Sample& sample) {
  std::vector<double> out;
  double norm = 0.0;
  for (std::size_t p = 0; p < s.size(); ++p) {
    const PredictionOutput o = s[p].predict(sample);
    const double weight = w[p] * (s.mode() == ShiftMode::covariate_shift ? s[p].density(sample.x) : 1.0);
    if (out.empty()) out.assign(o.arity(), 0.0);
    for (std::size_t j = 0; j < o.arity(); ++j) out[j] += weight * o[j];
    norm += weight;
  }
  if (s.mode() == ShiftMode::covariate_shift) {
    for (double& v : out) v /= norm;
  }
  return out;
}

inline double reference_loss(LossKind loss, const std::vector<double>& mixed, const Sample& sample,
                             bool likelihood) {
  if (loss == LossKind::cross_entropy) {
    const double p = likelihood ? mixed[0] : mixed[static_cast<std::size_t>(std::get<Label>(sample.y).index)];
    return -std::log(std::max(p, 1e-12));
  }
  const auto& y = std::get<RealVector>(sample.y);
  double total = 0.0;
  for (std::size_t j = 0; j < y.size(); ++j) total += (mixed[j] - y[j]) * (mixed[j] - y[j]);
  return total;
}

// sum_g w_g mean_{D_g} loss(f_w(x), y)
inline double reference_objective(const std::vector<double>& w, const GroupDatasets& d, const GroupOracleSet& s,
                                  LossKind loss, bool likelihood = false) {
  double total = 0.0;
  for (std::size_t g = 0; g < d.size(); ++g) {
    double mean = 0.0;
    for (const Sample& sample : d.groups[g]) {
      mean += reference_loss(loss, reference_mixture(w, s, sample), sample, likelihood);
    }
    total += w[g] * mean / static_cast<double>(d.groups[g].size());
  }
  return total;
}

}  // namespace testing
