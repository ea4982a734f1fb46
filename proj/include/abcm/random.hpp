#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace abcm {

/// Random source used by every stochastic component. Each run owns one.
using Rng = std::mt19937_64;

/// SplitMix64 finalizer: a bijective 64-bit avalanche mix.
constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derives a child seed from a base seed and a sequence of indices.
///
/// h0 = splitmix64(base); h_{k+1} = splitmix64(h_k ^ (index_k + k + 1)).
/// The per-position offset keeps (a, b) and (b, a) from colliding trivially.
constexpr std::uint64_t mix_seed(std::uint64_t base,
                                 std::initializer_list<std::uint64_t> indices) noexcept {
  std::uint64_t h = splitmix64(base);
  std::uint64_t position = 1;
  for (auto index : indices) {
    h = splitmix64(h ^ (index + position));
    ++position;
  }
  return h;
}

/// Uniform double in [0, 1) built from the top 53 bits of one engine draw.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace abcm
