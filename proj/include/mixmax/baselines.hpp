#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include "mixmax/simplex.hpp"

namespace mixmax {

/// Uniform 1/K weights.
MixtureWeights balanced_weights(std::size_t k);

/// All mass on group `index`.
MixtureWeights single_group_weights(std::size_t k, std::size_t index);

/// A baseline named in a config: "balanced", "vertex:<index>" or "mixmax".
struct BaselineName {
  enum class Kind { balanced, vertex, mixmax };
  Kind kind = Kind::balanced;
  std::size_t index = 0;

  std::string str() const;
};

/// Throws DomainError on anything else.
BaselineName parse_baseline(std::string_view name);

}  // namespace mixmax
