#pragma once

#include <array>
#include <cstdint>

namespace mallows {

/// splitmix64 finalizer; a bijective avalanche mix of 64 bits.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// xoshiro256++ (Blackman and Vigna). The 256-bit state is filled from a single
/// 64-bit seed by the splitmix64 counter sequence mix64(seed + k * golden), so
/// any integer is a valid seed and nearby seeds give unrelated streams.
/// Output is identical on every platform for a given seed.
class Xoshiro256pp {
 public:
  using result_type = std::uint64_t;

  explicit Xoshiro256pp(std::uint64_t seed_value = 0) { seed(seed_value); }

  void seed(std::uint64_t seed_value) {
    std::uint64_t counter = seed_value;
    for (auto& word : s_) {
      word = mix64(counter);
      counter += 0x9e3779b97f4a7c15ULL;
    }
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  friend bool operator==(const Xoshiro256pp&, const Xoshiro256pp&) = default;

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::array<std::uint64_t, 4> s_{};
};

/// The one generator used everywhere.
using Rng = Xoshiro256pp;

/// Seed of replica `replica` within stream `stream` of a run seeded with
/// `master`: mix64(mix64(mix64(master) ^ stream) ^ replica). Distinct
/// (stream, replica) pairs give unrelated generator states.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t replica) {
  return mix64(mix64(mix64(master) ^ stream) ^ replica);
}

/// Uniform on [0, 1) with 53 random bits.
inline double uniform_unit(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Uniform on (0, 1]: a zero draw is rejected and redrawn so that log() stays finite.
inline double uniform_positive_unit(Rng& rng) {
  for (;;) {
    const double u = uniform_unit(rng);
    if (u > 0.0) return u;
  }
}

/// Uniform on {0, ..., bound-1}; bound > 0. Lemire's multiply-shift with rejection.
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t bound) {
  unsigned __int128 m = static_cast<unsigned __int128>(rng()) * bound;
  auto low = static_cast<std::uint64_t>(m);
  if (low < bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (low < threshold) {
      m = static_cast<unsigned __int128>(rng()) * bound;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

}  // namespace mallows
