#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace splitvor {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer. A bijection on 64-bit words with full avalanche.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seed of one replicate. For fixed (master, experiment) the map
/// replicate -> seed is injective: the argument of the outer mix64 is an
/// odd multiple of (h + replicate) plus a constant, and mix64 is a bijection.
constexpr std::uint64_t replicate_seed(std::uint64_t master, std::uint64_t experiment,
                                       std::uint64_t replicate) noexcept {
  const std::uint64_t h = mix64(experiment ^ 0xD6E8FEB86659FD93ULL);
  return mix64(master + 0x9E3779B97F4A7C15ULL * (h + replicate));
}

/// Independent sub-stream of a replicate (tree, lengths, sources, ...).
constexpr std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  return mix64(seed ^ mix64(stream + 0x632BE59BD9B4E019ULL));
}

/// Uniform on [0, 1) with 53 random bits; independent of the standard
/// library's distribution implementation.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1p-53; }

/// Uniform on (0, 1].
inline double uniform01_open_low(Rng& rng) { return 1.0 - uniform01(rng); }

/// Standard exponential variate.
inline double standard_exponential(Rng& rng) { return -std::log(uniform01_open_low(rng)); }

inline double sample_gamma(double shape, Rng& rng) {
  std::gamma_distribution<double> g(shape, 1.0);
  return g(rng);
}

/// Beta(a, b) via two gammas. Degenerate parameters (a or b equal to 0)
/// return the corresponding point mass.
inline double sample_beta(double a, double b, Rng& rng) {
  if (a <= 0.0) return 0.0;
  if (b <= 0.0) return 1.0;
  const double x = sample_gamma(a, rng);
  const double y = sample_gamma(b, rng);
  if (x + y == 0.0) return a >= b ? 1.0 : 0.0;
  return x / (x + y);
}

inline double standard_normal(Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return n(rng);
}

}  // namespace splitvor
