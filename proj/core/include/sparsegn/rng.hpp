#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace sparsegn {

using Rng = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Stable stream derivation: distinct (seed, stream) pairs give unrelated seeds.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  return splitmix64(splitmix64(seed) ^ (stream * 0xd1b54a32d192ed03ULL + 0x8cb92ba72f3d8dd7ULL));
}

/// Standard normal upper tail Pr[Z >= x].
inline double gaussian_tail(double x) noexcept { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

}  // namespace sparsegn
