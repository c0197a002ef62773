#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mixmax {

/// A point on the probability simplex over K groups.
///
/// Entries are nonnegative and sum to one; every constructor renormalizes so
/// the sum is exact up to rounding (|sum - 1| <= 1e-12).
class MixtureWeights {
 public:
  /// All entries 1/k. Throws DimensionError when k == 0.
  static MixtureWeights uniform(std::size_t k);

  /// Indicator of `index`.
  static MixtureWeights vertex(std::size_t k, std::size_t index);

  /// Accepts values already on the simplex (nonnegative, |sum - 1| <= 1e-9)
  /// and renormalizes away the residual.
  static MixtureWeights from_values(std::vector<double> values);

  /// Scales any nonnegative vector with a positive finite sum onto the simplex.
  static MixtureWeights normalized(std::vector<double> values);

  std::size_t size() const { return weights_.size(); }
  double operator[](std::size_t i) const { return weights_[i]; }
  std::span<const double> values() const { return weights_; }
  const std::vector<double>& as_vector() const { return weights_; }

  bool operator==(const MixtureWeights&) const = default;

 private:
  explicit MixtureWeights(std::vector<double> weights) : weights_(std::move(weights)) {}

  std::vector<double> weights_;
};

inline MixtureWeights uniform(std::size_t k) { return MixtureWeights::uniform(k); }

/// One step of entropic mirror ascent (exponentiated gradient):
/// w_p proportional to w_p * exp(step_size * g_p).
///
/// The largest exponent among groups with positive weight is subtracted
/// before exponentiation; normalization makes the shift exact. Entries that
/// are zero stay zero.
MixtureWeights mirror_ascent_step(const MixtureWeights& weights, std::span<const double> gradient,
                                  double step_size);

double l1_distance(const MixtureWeights& a, const MixtureWeights& b);

}  // namespace mixmax
