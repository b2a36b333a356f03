#pragma once

#include <cstdint>
#include <random>

namespace sdp {

using Rng = std::mt19937_64;

/// Identifiers of the independent random streams used by training and
/// evaluation. Each stream is seeded as seed XOR id.
enum class Stream : std::uint64_t {
  kNoise = 0x6e6f697365000001ULL,
  kTime = 0x74696d6500000002ULL,
  kStep = 0x7374657000000003ULL,
  kDropout = 0x64726f7000000004ULL,
  kData = 0x6461746100000005ULL,
  kInit = 0x696e697400000006ULL,
  kScene = 0x7363656e00000007ULL,
  kEval = 0x6576616c00000008ULL,
};

inline Rng make_stream(std::uint64_t seed, Stream id) {
  return Rng(seed ^ static_cast<std::uint64_t>(id));
}

/// SplitMix64 finalizer, used to derive per-episode / per-task seeds.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// The per-purpose streams consumed while building training batches.
struct TrainingStreams {
  Rng noise;
  Rng time;
  Rng step;
  Rng dropout;
  Rng data;

  explicit TrainingStreams(std::uint64_t seed)
      : noise(make_stream(seed, Stream::kNoise)),
        time(make_stream(seed, Stream::kTime)),
        step(make_stream(seed, Stream::kStep)),
        dropout(make_stream(seed, Stream::kDropout)),
        data(make_stream(seed, Stream::kData)) {}
};

inline double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

}  // namespace sdp
