#pragma once

#include <cstdint>
#include <random>

namespace mixmax {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seed of the `counter`-th child stream of `parent`.
///
/// Child streams are splitmix64(parent + (counter + 1) * 0x9E3779B97F4A7C15),
/// so any stream can be replayed from its parent seed alone.
inline std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t counter) {
  return splitmix64(parent + (counter + 1) * 0x9E3779B97F4A7C15ULL);
}

}  // namespace mixmax
