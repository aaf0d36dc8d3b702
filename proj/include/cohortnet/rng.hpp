#pragma once

#include <cstdint>
#include <random>

namespace cohortnet {

[[nodiscard]] constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Seed of an independent substream; substreams let parallel and sequential runs draw
// identical numbers for the same work item.
[[nodiscard]] constexpr std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632BE59BD9B4E019ULL));
}

using Rng = std::mt19937_64;

[[nodiscard]] inline Rng substream(std::uint64_t seed, std::uint64_t stream) {
  return Rng{substream_seed(seed, stream)};
}

}  // namespace cohortnet
