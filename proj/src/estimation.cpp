#include "mixmax/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <sstream>

#include "mixmax/error.hpp"

namespace mixmax {

std::string SplitPlan::name() const {
  if (mode == Mode::data_reuse) return "data_reuse";
  const auto proxy = static_cast<int>(std::lround(proxy_fraction * 100.0));
  return "split_" + std::to_string(proxy) + "_" + std::to_string(100 - proxy);
}

void SplitPlan::validate() const {
  if (mode == Mode::split && !(proxy_fraction > 0.0 && proxy_fraction < 1.0)) {
    throw DomainError("split fraction must lie strictly between 0 and 1");
  }
}

SplitParts split_group(const SampleCollection& samples, const SplitPlan& plan, std::size_t group_index) {
  plan.validate();
  if (samples.empty()) throw DomainError("cannot split an empty group");
  if (plan.mode == SplitPlan::Mode::data_reuse) return {samples, samples};

  // Bucket by sequence length; non-sequence samples share one bucket.
  std::map<std::size_t, std::vector<std::size_t>> buckets;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto* seq = std::get_if<TokenSequence>(&samples[i].y);
    buckets[seq ? seq->size() : 0].push_back(i);
  }

  Rng rng(derive_seed(plan.seed, group_index));
  std::vector<std::size_t> proxy_idx;
  std::vector<std::size_t> gradient_idx;
  for (auto& [length, idx] : buckets) {
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto take = static_cast<std::size_t>(std::lround(plan.proxy_fraction * static_cast<double>(idx.size())));
    proxy_idx.insert(proxy_idx.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(take));
    gradient_idx.insert(gradient_idx.end(), idx.begin() + static_cast<std::ptrdiff_t>(take), idx.end());
  }
  std::sort(proxy_idx.begin(), proxy_idx.end());
  std::sort(gradient_idx.begin(), gradient_idx.end());
  if (proxy_idx.empty() || gradient_idx.empty()) {
    throw DomainError("split " + plan.name() + " leaves an empty part in group " + std::to_string(group_index));
  }

  SplitParts parts;
  parts.proxy.reserve(proxy_idx.size());
  parts.gradient.reserve(gradient_idx.size());
  for (std::size_t i : proxy_idx) parts.proxy.push_back(samples[i]);
  for (std::size_t i : gradient_idx) parts.gradient.push_back(samples[i]);
  return parts;
}

MarkovChainSpec fit_markov_proxy(const SampleCollection& samples, std::size_t vocab, std::size_t max_length,
                                 double smoothing) {
  if (vocab == 0) throw DomainError("vocabulary size must be positive");
  if (samples.empty()) throw DomainError("cannot fit a Markov proxy without samples");
  if (!(smoothing >= 0.0) || !std::isfinite(smoothing)) throw DomainError("smoothing must be nonnegative");

  std::vector<double> counts(vocab * vocab, 0.0);
  std::vector<double> first(vocab, 0.0);
  for (const Sample& s : samples) {
    const auto* seq = std::get_if<TokenSequence>(&s.y);
    if (seq == nullptr || seq->empty()) throw DomainError("Markov proxy needs non-empty token sequences");
    for (int token : *seq) {
      if (token < 0 || static_cast<std::size_t>(token) >= vocab) throw DomainError("token outside vocabulary");
    }
    first[static_cast<std::size_t>((*seq)[0])] += 1.0;
    for (std::size_t t = 1; t < seq->size(); ++t) {
      counts[static_cast<std::size_t>((*seq)[t - 1]) * vocab + static_cast<std::size_t>((*seq)[t])] += 1.0;
    }
  }

  const auto smooth = [&](std::span<double> row, const std::string& what) {
    double total = 0.0;
    for (double c : row) total += c;
    const double denom = total + static_cast<double>(vocab) * smoothing;
    if (!(denom > 0.0)) throw DomainError(what + " was never observed and smoothing is zero");
    for (double& c : row) c = (c + smoothing) / denom;
  };
  for (std::size_t i = 0; i < vocab; ++i) {
    smooth(std::span<double>(counts.data() + i * vocab, vocab), "source state " + std::to_string(i));
  }
  smooth(first, "initial token");
  return MarkovChainSpec(vocab, std::move(counts), std::move(first), max_length);
}

KdeModel::KdeModel(std::vector<Covariate> points, std::vector<double> bandwidth)
    : points_(std::move(points)), bandwidth_(std::move(bandwidth)) {
  if (points_.size() < 2) throw DomainError("KDE needs at least two points");
  for (const auto& p : points_) {
    if (p.size() != bandwidth_.size()) throw DimensionError("KDE point dimension mismatch");
  }
  for (double h : bandwidth_) {
    if (!(h > 0.0) || !std::isfinite(h)) throw DomainError("KDE bandwidths must be positive");
  }
}

double KdeModel::density(const Covariate& x) const {
  if (x.size() != dimension()) throw DimensionError("KDE query has wrong dimension");
  const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  double total = 0.0;
  for (const auto& p : points_) {
    double term = 1.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double u = (x[j] - p[j]) / bandwidth_[j];
      term *= inv_sqrt_2pi * std::exp(-0.5 * u * u) / bandwidth_[j];
    }
    total += term;
  }
  return total / static_cast<double>(points_.size());
}

KdeModel fit_kde(const std::vector<Covariate>& points) {
  const std::size_t n = points.size();
  if (n < 2) throw DomainError("KDE needs at least two points");
  const std::size_t d = points[0].size();
  if (d == 0) throw DimensionError("KDE points need at least one dimension");

  std::vector<double> bandwidth(d);
  const double scott = std::pow(static_cast<double>(n), -1.0 / (static_cast<double>(d) + 4.0));
  for (std::size_t j = 0; j < d; ++j) {
    double mean = 0.0;
    for (const auto& p : points) {
      if (p.size() != d) throw DimensionError("KDE point dimension mismatch");
      mean += p[j];
    }
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (const auto& p : points) ss += (p[j] - mean) * (p[j] - mean);
    const double sigma = std::sqrt(ss / static_cast<double>(n - 1));
    if (!(sigma > 0.0)) throw DomainError("covariate dimension " + std::to_string(j) + " has zero variance");
    bandwidth[j] = sigma * scott;
  }
  return KdeModel(points, std::move(bandwidth));
}

double kde_density(const KdeModel& model, const Covariate& x) { return model.density(x); }

namespace {

std::size_t bin_of(const BinnedProxyFamily& family, double x) {
  const double t = (x - family.lower) / (family.upper - family.lower);
  const auto b = static_cast<long>(std::floor(t * static_cast<double>(family.bins)));
  return static_cast<std::size_t>(std::clamp<long>(b, 0, static_cast<long>(family.bins) - 1));
}

GroupOracle fit_binned(const SampleCollection& samples, const BinnedProxyFamily& family) {
  if (family.bins == 0 || !(family.upper > family.lower)) throw DomainError("invalid binned proxy range");
  GroupOracle oracle;
  if (family.classes > 0) {
    const std::size_t m = family.classes;
    std::vector<double> counts(family.bins * m, 0.0);
    for (const Sample& s : samples) {
      const auto* label = std::get_if<Label>(&s.y);
      if (label == nullptr || label->index < 0 || static_cast<std::size_t>(label->index) >= m) {
        throw DomainError("binned classifier needs labels in [0, classes)");
      }
      counts[bin_of(family, s.x.at(0)) * m + static_cast<std::size_t>(label->index)] += 1.0;
    }
    std::vector<std::vector<double>> table(family.bins, std::vector<double>(m));
    for (std::size_t b = 0; b < family.bins; ++b) {
      double total = 0.0;
      for (std::size_t c = 0; c < m; ++c) total += counts[b * m + c];
      for (std::size_t c = 0; c < m; ++c) {
        table[b][c] = total + family.smoothing * static_cast<double>(m) > 0.0
                          ? (counts[b * m + c] + family.smoothing) / (total + family.smoothing * static_cast<double>(m))
                          : 1.0 / static_cast<double>(m);
      }
    }
    oracle.predict = [family, table = std::move(table)](const Sample& s) {
      return PredictionOutput::probabilities(table[bin_of(family, s.x.at(0))]);
    };
    return oracle;
  }

  const auto* first = std::get_if<RealVector>(&samples.front().y);
  if (first == nullptr || first->empty()) throw DomainError("binned regressor needs real-valued targets");
  const std::size_t r = first->size();
  std::vector<double> sums(family.bins * r, 0.0);
  std::vector<double> counts(family.bins, 0.0);
  std::vector<double> overall(r, 0.0);
  for (const Sample& s : samples) {
    const auto* y = std::get_if<RealVector>(&s.y);
    if (y == nullptr || y->size() != r) throw DimensionError("inconsistent regression targets");
    const std::size_t b = bin_of(family, s.x.at(0));
    counts[b] += 1.0;
    for (std::size_t j = 0; j < r; ++j) {
      sums[b * r + j] += (*y)[j];
      overall[j] += (*y)[j];
    }
  }
  std::vector<std::vector<double>> table(family.bins, std::vector<double>(r));
  for (std::size_t b = 0; b < family.bins; ++b) {
    for (std::size_t j = 0; j < r; ++j) {
      table[b][j] = counts[b] > 0.0 ? sums[b * r + j] / counts[b]
                                    : overall[j] / static_cast<double>(samples.size());
    }
  }
  oracle.predict = [family, table = std::move(table)](const Sample& s) {
    return PredictionOutput::regression(table[bin_of(family, s.x.at(0))]);
  };
  return oracle;
}

}  // namespace

nlohmann::json FittedProxies::to_json() const {
  nlohmann::json j;
  j["description"] = description;
  j["chains"] = nlohmann::json::array();
  for (const auto& c : chains) j["chains"].push_back(mixmax::to_json(c));
  j["kde_bandwidths"] = nlohmann::json::array();
  for (const auto& k : densities) j["kde_bandwidths"].push_back(k.bandwidth());
  return j;
}

FittedProxies fit_proxies(const std::vector<SampleCollection>& samples, const ProxyFamily& family) {
  if (samples.empty()) throw DimensionError("need samples for at least one group");
  for (const auto& group : samples) {
    if (group.empty()) throw DomainError("cannot fit a proxy on an empty group");
  }

  if (const auto* markov = std::get_if<MarkovProxyFamily>(&family)) {
    std::vector<MarkovChainSpec> chains;
    chains.reserve(samples.size());
    for (const auto& group : samples) {
      chains.push_back(fit_markov_proxy(group, markov->vocab, markov->max_length, markov->smoothing));
    }
    std::ostringstream desc;
    desc << "smoothed transition counts (smoothing " << markov->smoothing
         << ") in place of trained sequence models";
    GroupOracleSet oracles = chains_as_oracles(chains);
    return FittedProxies{std::move(oracles), std::move(chains), {}, desc.str()};
  }

  const auto& binned = std::get<BinnedProxyFamily>(family);
  std::vector<GroupOracle> oracles;
  std::vector<KdeModel> densities;
  for (const auto& group : samples) {
    GroupOracle oracle = fit_binned(group, binned);
    if (binned.mode == ShiftMode::covariate_shift) {
      std::vector<Covariate> xs;
      xs.reserve(group.size());
      for (const Sample& s : group) xs.push_back(s.x);
      densities.push_back(fit_kde(xs));
      oracle.density = [kde = densities.back()](const Covariate& x) { return kde.density(x); };
    }
    oracles.push_back(std::move(oracle));
  }
  std::ostringstream desc;
  desc << binned.bins << "-bin histogram predictor" << (binned.mode == ShiftMode::covariate_shift ? " with Scott KDE" : "");
  return FittedProxies{GroupOracleSet(std::move(oracles), binned.mode), {}, std::move(densities), desc.str()};
}

E2MixMaxResult e2mixmax_detailed(const GroupDatasets& data, const SplitPlan& plan, const ProxyFamily& family,
                                 const SolverConfig& config, LossKind loss) {
  plan.validate();
  const std::size_t k = data.size();
  if (k == 0) throw DimensionError("need at least one group");

  std::vector<SampleCollection> proxy_parts(k);
  GroupDatasets gradient_data;
  gradient_data.groups.resize(k);
  std::string proxy_source = "split";
  if (plan.mode == SplitPlan::Mode::split && data.heldout) {
    if (data.heldout->size() != k) throw DimensionError("held-out collections do not match group count");
    proxy_parts = *data.heldout;
    gradient_data.groups = data.groups;
    proxy_source = "heldout";
  } else {
    for (std::size_t g = 0; g < k; ++g) {
      SplitParts parts = split_group(data.groups[g], plan, g);
      proxy_parts[g] = std::move(parts.proxy);
      gradient_data.groups[g] = std::move(parts.gradient);
    }
    if (plan.mode == SplitPlan::Mode::data_reuse) proxy_source = "all";
  }

  FittedProxies proxies = fit_proxies(proxy_parts, family);
  SolveReport report = solve(MixMaxProblem(gradient_data, proxies.oracles, loss), config);
  report.tags["estimator"] = "e2mixmax";
  report.tags["plan"] = plan.name();
  report.tags["proxy_source"] = proxy_source;
  report.tags["proxy"] = proxies.description;
  return {std::move(report), std::move(proxies)};
}

SolveReport e2mixmax(const GroupDatasets& data, const SplitPlan& plan, const ProxyFamily& family,
                     const SolverConfig& config, LossKind loss) {
  return e2mixmax_detailed(data, plan, family, config, loss).report;
}

}  // namespace mixmax
