#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace pmmd {

using Rng = std::mt19937_64;

// Purposes that get their own independent stream derived from a run seed.
enum class Stream : std::uint32_t {
  masks = 1,
  signs = 2,
  data = 3,
  params = 4,
  samples = 5,
  evaluation = 6,
  baseline = 7,
  dataset = 8,
  split = 9,
  user = 10,
};

// A deterministic substream keyed by (seed, purpose, index). Streams with
// different keys are statistically independent for all practical purposes.
inline Rng substream(std::uint64_t seed, Stream purpose, std::uint64_t index = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(purpose),
                    static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  return Rng(seq);
}

inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

// Uniform in [0, n).
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  std::uniform_int_distribution<std::size_t> dist(0, n - 1);
  return dist(rng);
}

inline bool coin(Rng& rng) { return (rng() >> 63) != 0; }

inline double standard_normal(Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  return dist(rng);
}

}  // namespace pmmd
