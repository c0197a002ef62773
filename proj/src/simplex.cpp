#include "mixmax/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mixmax/error.hpp"

namespace mixmax {

namespace {

void normalize_in_place(std::vector<double>& v) {
  double total = 0.0;
  for (double x : v) total += x;
  for (double& x : v) x /= total;
}

}  // namespace

MixtureWeights MixtureWeights::uniform(std::size_t k) {
  if (k == 0) throw DimensionError("mixture weights need at least one group");
  return MixtureWeights(std::vector<double>(k, 1.0 / static_cast<double>(k)));
}

MixtureWeights MixtureWeights::vertex(std::size_t k, std::size_t index) {
  if (k == 0) throw DimensionError("mixture weights need at least one group");
  if (index >= k) {
    throw DimensionError("vertex index " + std::to_string(index) + " out of range for " +
                         std::to_string(k) + " groups");
  }
  std::vector<double> v(k, 0.0);
  v[index] = 1.0;
  return MixtureWeights(std::move(v));
}

MixtureWeights MixtureWeights::from_values(std::vector<double> values) {
  if (values.empty()) throw DimensionError("mixture weights need at least one group");
  double total = 0.0;
  for (double x : values) {
    if (!std::isfinite(x) || x < 0.0) throw DomainError("mixture weights must be finite and nonnegative");
    total += x;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw DomainError("mixture weights sum to " + std::to_string(total) + ", expected 1");
  }
  normalize_in_place(values);
  return MixtureWeights(std::move(values));
}

MixtureWeights MixtureWeights::normalized(std::vector<double> values) {
  if (values.empty()) throw DimensionError("mixture weights need at least one group");
  double total = 0.0;
  for (double x : values) {
    if (!std::isfinite(x) || x < 0.0) throw DomainError("mixture weights must be finite and nonnegative");
    total += x;
  }
  if (!(total > 0.0) || !std::isfinite(total)) throw DomainError("cannot normalize a zero vector");
  normalize_in_place(values);
  return MixtureWeights(std::move(values));
}

MixtureWeights mirror_ascent_step(const MixtureWeights& weights, std::span<const double> gradient,
                                  double step_size) {
  const std::size_t k = weights.size();
  if (gradient.size() != k) {
    throw DimensionError("gradient has " + std::to_string(gradient.size()) + " entries, weights have " +
                         std::to_string(k));
  }
  if (!(step_size > 0.0) || !std::isfinite(step_size)) throw DomainError("step size must be positive");
  for (double g : gradient) {
    if (!std::isfinite(g)) throw NumericError("non-finite gradient entry in mirror ascent step");
  }

  double shift = -std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < k; ++p) {
    if (weights[p] > 0.0) shift = std::max(shift, step_size * gradient[p]);
  }

  std::vector<double> next(k);
  for (std::size_t p = 0; p < k; ++p) {
    next[p] = weights[p] > 0.0 ? weights[p] * std::exp(step_size * gradient[p] - shift) : 0.0;
  }
  return MixtureWeights::normalized(std::move(next));
}

double l1_distance(const MixtureWeights& a, const MixtureWeights& b) {
  if (a.size() != b.size()) throw DimensionError("l1 distance between weights of different size");
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += std::abs(a[i] - b[i]);
  return d;
}

}  // namespace mixmax
