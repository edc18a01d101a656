#pragma once

#include <cstdint>
#include <random>

namespace mhd {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; mixes a master seed with a stream index so that
/// independent tasks (replicates, permutations, per-point jiggles) get
/// uncorrelated generators regardless of execution order.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
  return Rng(derive_seed(seed, stream));
}

}  // namespace mhd
