#pragma once

// Reproducible random streams.
//
// Every Monte Carlo work item owns one stream, derived from
// (master_seed, stream_index) alone. Results therefore do not depend on
// how work items are scheduled over threads.

#include <cstdint>
#include <limits>

#include <boost/random/normal_distribution.hpp>

namespace sl2flow {

/// SplitMix64 finalizer; bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// xoshiro256** generator. Satisfies UniformRandomBitGenerator.
class Xoshiro256 {
 public:
  using result_type = std::uint64_t;

  explicit Xoshiro256(std::uint64_t seed = 0) noexcept {
    std::uint64_t x = seed;
    for (auto& w : s_) {
      x += 0x9e3779b97f4a7c15ULL;
      w = mix64(x);
    }
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() noexcept {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }
  std::uint64_t s_[4];
};

/// Counter-based stream derivation: the stream for `index` is a pure function
/// of (master_seed, index).
inline Xoshiro256 seed_stream(std::uint64_t master_seed,
                              std::uint64_t stream_index) noexcept {
  const std::uint64_t key =
      mix64(master_seed ^ mix64(stream_index + 0x632be59bd9b4e019ULL));
  return Xoshiro256(key);
}

/// Derives a child seed, for two-level schemes (path seed -> cell stream).
inline std::uint64_t derive_seed(std::uint64_t master_seed,
                                 std::uint64_t index) noexcept {
  return mix64(mix64(master_seed + 0x9e3779b97f4a7c15ULL) ^
               mix64(index ^ 0xd1b54a32d192ed03ULL));
}

/// Standard normal sampler (ziggurat). Bit-identical across platforms for a
/// given engine state, unlike std::normal_distribution.
class NormalSampler {
 public:
  template <class Engine>
  double operator()(Engine& eng) {
    return dist_(eng);
  }

 private:
  boost::random::normal_distribution<double> dist_{0.0, 1.0};
};

}  // namespace sl2flow
