#pragma once

// Seeded random streams. Every concern (arrivals, outcomes, durations,
// policy randomization) draws from its own generator derived from the episode
// seed, so swapping a policy never perturbs the arrival sequence.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <span>

namespace reusable {

using Rng = std::mt19937_64;

enum class Stream : std::uint64_t {
  arrivals = 1,
  outcomes = 2,
  durations = 3,
  policy = 4,
  policy_static = 5,
  policy_adaptive = 6,
  generator = 7,
  saa = 8,
};

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) noexcept {
  return splitmix64(splitmix64(seed) ^ splitmix64(tag * 0xD1B54A32D192ED03ULL));
}

inline Rng make_stream(std::uint64_t seed, Stream s) {
  return Rng{derive_seed(seed, static_cast<std::uint64_t>(s))};
}

/// Uniform double in [0, 1) built from the top 53 bits; identical on every
/// platform, unlike std::uniform_real_distribution.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Unbiased integer in [0, n).
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return static_cast<std::size_t>(v % bound);
}

/// Inverse-CDF draw from nonnegative (not necessarily normalized) weights.
/// Zero-weight entries are never returned.
inline std::size_t sample_discrete(Rng& rng, std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  const double u = uniform01(rng) * total;
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    acc += weights[i];
    last_positive = i;
    if (u < acc) return i;
  }
  return last_positive;
}

}  // namespace reusable
