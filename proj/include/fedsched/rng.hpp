#pragma once

#include <cstdint>
#include <random>

namespace fedsched {

using Rng = std::mt19937_64;

// Named sub-streams so that each consumer of randomness (topology, fading,
// scheduler, per-client training, ...) gets its own generator derived from
// the experiment seed. Adding draws to one stream never shifts another.
enum class Stream : std::uint64_t {
  kTopology = 1,
  kScenario = 2,
  kEnvironment = 3,
  kScheduler = 4,
  kData = 5,
  kTraining = 6,
  kNoise = 7,
  kOracle = 8,
  kModelInit = 9,
};

// splitmix64 finalizer.
inline std::uint64_t MixBits(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline Rng DeriveRng(std::uint64_t seed, Stream stream, std::uint64_t index = 0) {
  std::uint64_t h = MixBits(seed);
  h = MixBits(h ^ static_cast<std::uint64_t>(stream));
  h = MixBits(h ^ index);
  return Rng(h);
}

// Uniform double in [0, 1) with 53 random bits. Used instead of
// std::uniform_real_distribution where the exact draw matters for
// reproducibility across standard libraries.
inline double Uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace fedsched
