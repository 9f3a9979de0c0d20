#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace hmd {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Sub-seed for one labeled consumer of randomness, e.g. ("folds", 0) or
/// ("walk", node * walks + r). All randomness in a run descends from one seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view label,
                                 std::uint64_t index = 0) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return splitmix64(splitmix64(seed ^ h) + index);
}

/// Uniform double in [0, 1) from the top 53 bits.
inline double uniform01(Rng& rng) noexcept {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, n). n must be positive.
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t n) noexcept {
  // Rejection sampling keeps the result exactly uniform.
  const std::uint64_t limit = (~std::uint64_t{0} / n) * n;
  std::uint64_t x = rng();
  while (x >= limit) x = rng();
  return x % n;
}

/// Fisher-Yates with our own index draw so the permutation does not depend
/// on the standard library's distribution implementation.
template <class RandomIt>
void shuffle(RandomIt first, RandomIt last, Rng& rng) {
  const auto n = static_cast<std::uint64_t>(last - first);
  for (std::uint64_t i = n; i > 1; --i) {
    const auto j = uniform_below(rng, i);
    std::swap(first[i - 1], first[j]);
  }
}

}  // namespace hmd
