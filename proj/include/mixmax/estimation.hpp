#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "mixmax/mixture.hpp"
#include "mixmax/objective.hpp"
#include "mixmax/solver.hpp"
#include "mixmax/synthetic.hpp"

namespace mixmax {

/// How each group's samples are divided between proxy fitting and the
/// gradient (EMixMax) pass.
struct SplitPlan {
  enum class Mode { split, data_reuse };

  Mode mode = Mode::data_reuse;
  double proxy_fraction = 0.75;  // split mode only, in (0, 1)
  std::uint64_t seed = 0;

  static SplitPlan split(double proxy_fraction, std::uint64_t seed) { return {Mode::split, proxy_fraction, seed}; }
  static SplitPlan data_reuse(std::uint64_t seed = 0) { return {Mode::data_reuse, 0.75, seed}; }

  /// "data_reuse" or "split_75_25" style names.
  std::string name() const;
  void validate() const;
};

struct SplitParts {
  SampleCollection proxy;
  SampleCollection gradient;
};

/// Partition one group's samples. Sequence samples are split separately
/// within each length so every length keeps the requested proportion; the
/// shuffle is seeded by (plan.seed, group_index). In data_reuse mode both
/// parts are the full collection. Throws DomainError if a part ends up empty.
SplitParts split_group(const SampleCollection& samples, const SplitPlan& plan, std::size_t group_index);

/// Smoothed maximum-likelihood Markov chain:
/// T(i, j) = (count(i -> j) + s) / (count(i -> .) + V s), and the initial
/// distribution likewise from first tokens.
MarkovChainSpec fit_markov_proxy(const SampleCollection& samples, std::size_t vocab, std::size_t max_length,
                                 double smoothing);

/// Product-Gaussian kernel density estimate with Scott's bandwidth
/// h_j = sigma_j * n^(-1/(d+4)) (sigma_j the unbiased sample deviation).
class KdeModel {
 public:
  KdeModel(std::vector<Covariate> points, std::vector<double> bandwidth);

  std::size_t size() const { return points_.size(); }
  std::size_t dimension() const { return bandwidth_.size(); }
  const std::vector<double>& bandwidth() const { return bandwidth_; }
  const std::vector<Covariate>& points() const { return points_; }

  double density(const Covariate& x) const;

 private:
  std::vector<Covariate> points_;
  std::vector<double> bandwidth_;
};

/// Throws DomainError for fewer than two points or a zero-variance dimension.
KdeModel fit_kde(const std::vector<Covariate>& points);
double kde_density(const KdeModel& model, const Covariate& x);

/// Proxy class for sequence data: smoothed transition counts.
struct MarkovProxyFamily {
  std::size_t vocab = 4;
  std::size_t max_length = 10;
  double smoothing = 0.5;
};

/// Proxy class for one-dimensional covariates: a histogram predictor over
/// `bins` equal-width bins of [lower, upper]. Label frequencies (with
/// additive smoothing) when `classes` > 0, bin means of the targets
/// otherwise. In covariate_shift mode each group also gets a KDE density.
struct BinnedProxyFamily {
  std::size_t bins = 20;
  std::size_t classes = 2;
  double lower = 0.0;
  double upper = 1.0;
  double smoothing = 1.0;
  ShiftMode mode = ShiftMode::no_shift;
};

using ProxyFamily = std::variant<MarkovProxyFamily, BinnedProxyFamily>;

struct FittedProxies {
  GroupOracleSet oracles;
  std::vector<MarkovChainSpec> chains;  // sequence proxies
  std::vector<KdeModel> densities;      // covariate-shift proxies
  std::string description;

  nlohmann::json to_json() const;
};

FittedProxies fit_proxies(const std::vector<SampleCollection>& samples, const ProxyFamily& family);

/// Fitted proxies and the solve that used them.
struct E2MixMaxResult {
  SolveReport report;
  FittedProxies proxies;
};

/// E2MixMax: fit proxies on the proxy part of each group (all data under
/// data reuse, or data.heldout when provided), then run the solver with the
/// proxies as oracles on the gradient part. The report's tags record the plan
/// and the proxy class.
E2MixMaxResult e2mixmax_detailed(const GroupDatasets& data, const SplitPlan& plan, const ProxyFamily& family,
                                 const SolverConfig& config, LossKind loss);

SolveReport e2mixmax(const GroupDatasets& data, const SplitPlan& plan, const ProxyFamily& family,
                     const SolverConfig& config, LossKind loss);

}  // namespace mixmax
