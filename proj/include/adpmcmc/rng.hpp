#pragma once

#include <cstdint>
#include <limits>
#include <random>

namespace adpmcmc {

/// SplitMix64: a Weyl counter passed through a 64-bit finalizer.
///
/// Every output is a pure function of (seed, counter), so streams can be
/// forked deterministically by hashing a stream id into a fresh seed.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed = 0) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    state_ += kGolden;
    return mix(state_);
  }

  std::uint64_t state() const { return state_; }

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

 private:
  std::uint64_t state_;
};

/// The single source of randomness for the library. Holds the engine plus
/// the distribution objects so that copies replay identically.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double normal() { return normal_(engine_); }
  double normal(double mean, double sd) { return mean + sd * normal_(engine_); }

  /// Gamma with the given shape and scale.
  double gamma(double shape, double scale) {
    return std::gamma_distribution<double>(shape, scale)(engine_);
  }

  std::uint64_t next_u64() { return engine_(); }

  /// An independent stream keyed by the current state and `stream_id`.
  /// Does not advance this generator.
  Rng split(std::uint64_t stream_id) const {
    const std::uint64_t key =
        SplitMix64::mix(engine_.state() ^ SplitMix64::mix(stream_id + SplitMix64::kGolden));
    return Rng(key);
  }

  SplitMix64& engine() { return engine_; }

 private:
  SplitMix64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace adpmcmc
