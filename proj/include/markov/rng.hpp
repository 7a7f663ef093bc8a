#pragma once

#include <cstdint>

namespace markov {

/// Counter-based pseudorandom generator (SplitMix64 output function over an
/// explicitly indexed stream).  State is just (seed, counter), so any draw
/// can be addressed directly and sequences are bit-identical across
/// platforms.  Substreams for independent tasks are derived by hashing a
/// stream id into the seed.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
      : seed_(derive(seed, stream)), counter_(0) {}

  /// Seed for an independent substream (replicate r, chain c, ...); the same
  /// mixing the stream constructor argument uses.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
    return seed ^ mix(stream * 0x9E3779B97F4A7C15ULL + 0x45D9F3B3335B369ULL);
  }

  std::uint64_t next_u64() {
    std::uint64_t z = seed_ + (++counter_) * 0x9E3779B97F4A7C15ULL;
    return mix(z);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  std::uint64_t counter() const { return counter_; }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
  std::uint64_t counter_;
};

}  // namespace markov
