#pragma once

#include <cstdint>
#include <random>

namespace rmfs {

using Rng = std::mt19937_64;

/// Independent RNG streams derived from the master seed, one per concern, so
/// that swapping a controller does not perturb the order stream.
enum class RngStream : std::uint64_t {
  layout = 1,
  catalog = 2,
  inventory = 3,
  orders = 4,
  controllers = 5,
};

/// splitmix64 finalizer over (seed, stream).
inline std::uint64_t derive_seed(std::uint64_t seed, RngStream stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (static_cast<std::uint64_t>(stream) + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline Rng make_rng(std::uint64_t seed, RngStream stream) { return Rng(derive_seed(seed, stream)); }

/// Uniform real in [0, 1) without relying on library distribution internals.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace rmfs
