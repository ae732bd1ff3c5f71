#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>

namespace otlpf {

// splitmix64 step; used both as a stand-alone mixer and to seed streams.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Deterministic combination of a seed with a stream label. Chaining calls
// derives per-(domain, time, particle) stream keys from one master seed, so
// draws are independent of scheduling and worker count.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t label) {
  std::uint64_t s = seed ^ (0xd1b54a32d192ed03ULL * (label + 1));
  return splitmix64(s);
}

// Stream domains used across the library. Values are part of the
// reproducibility contract: changing them changes all simulated sequences.
enum class StreamDomain : std::uint64_t {
  TruthState = 1,
  TruthObs = 2,
  EnsembleInit = 3,
  Forward = 4,
  Resampling = 5,
  GroundTruth = 6,
  Generic = 7,
};

// xoshiro256++ with Box-Muller normal draws. One instance per logical stream.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) {
    std::uint64_t s = seed;
    for (auto& word : state_) word = splitmix64(s);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform on (0, 1]; never returns 0 so log() is safe.
  double next_unit() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  // Uniform on [0, 1).
  double next_unit_halfopen() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double next_normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = next_unit();
    const double u2 = next_unit_halfopen();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 6.283185307179586476925286766559 * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

  // Standard complex normal: real and imaginary parts independent N(0, 1/2).
  std::complex<double> next_complex_normal() {
    const double re = next_normal();
    const double im = next_normal();
    return {re * 0.70710678118654752440, im * 0.70710678118654752440};
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::array<std::uint64_t, 4> state_{};
  bool have_spare_ = false;
  double spare_ = 0.0;
};

inline RngStream make_stream(std::uint64_t master, StreamDomain domain,
                             std::uint64_t t = 0, std::uint64_t p = 0) {
  std::uint64_t key = mix_seed(master, static_cast<std::uint64_t>(domain));
  key = mix_seed(key, t);
  key = mix_seed(key, p);
  return RngStream(key);
}

}  // namespace otlpf
