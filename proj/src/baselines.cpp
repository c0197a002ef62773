#include "mixmax/baselines.hpp"

#include <charconv>

#include "mixmax/error.hpp"

namespace mixmax {

MixtureWeights balanced_weights(std::size_t k) { return MixtureWeights::uniform(k); }

MixtureWeights single_group_weights(std::size_t k, std::size_t index) { return MixtureWeights::vertex(k, index); }

std::string BaselineName::str() const {
  switch (kind) {
    case Kind::balanced:
      return "balanced";
    case Kind::vertex:
      return "vertex:" + std::to_string(index);
    case Kind::mixmax:
      return "mixmax";
  }
  return "unknown";
}

BaselineName parse_baseline(std::string_view name) {
  if (name == "balanced") return {BaselineName::Kind::balanced, 0};
  if (name == "mixmax") return {BaselineName::Kind::mixmax, 0};
  constexpr std::string_view prefix = "vertex:";
  if (name.starts_with(prefix)) {
    const std::string_view digits = name.substr(prefix.size());
    std::size_t index = 0;
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), index);
    if (ec == std::errc() && ptr == digits.data() + digits.size() && !digits.empty()) {
      return {BaselineName::Kind::vertex, index};
    }
  }
  throw DomainError("unknown baseline '" + std::string(name) + "'");
}

}  // namespace mixmax
