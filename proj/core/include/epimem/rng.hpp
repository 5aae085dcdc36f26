#pragma once

#include <cstdint>
#include <random>

namespace epimem {

/// Generator keyed by (seed, stream, counter). Two calls with the same key
/// produce the same sequence regardless of what else was drawn before, which
/// is what lets per-step noise commute with truncation.
inline std::mt19937_64 keyed_rng(std::uint64_t seed, std::uint64_t stream,
                                 std::uint64_t counter = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    static_cast<std::uint32_t>(counter),
                    static_cast<std::uint32_t>(counter >> 32)};
  return std::mt19937_64(seq);
}

// Stream tags so different consumers of one seed never share draws.
enum class RngStream : std::uint64_t {
  kLabelCorruption = 1,
  kIndependentNoise = 2,
  kDriftNoise = 3,
  kShortTours = 4,
  kParamInit = 5,
  kTourPlanner = 6,
  kShuffle = 7,
  kGradCheck = 8,
};

inline std::mt19937_64 keyed_rng(std::uint64_t seed, RngStream stream,
                                 std::uint64_t counter = 0) {
  return keyed_rng(seed, static_cast<std::uint64_t>(stream), counter);
}

}  // namespace epimem
