#pragma once

// Portable random streams for the simulators.
//
// Generator: xoshiro256** (Blackman & Vigna), state expanded from a 64-bit key
// with SplitMix64.  Both are fully specified integer algorithms, so the raw
// output sequence is identical on every platform.  The standard library's
// distributions are deliberately not used: their algorithms are
// implementation-defined.  Uniform doubles take the top 53 bits; exponentials
// use -log(U) with U strictly inside (0, 1).
//
// Each replication r of a run seeded with `seed` draws from its own stream
// keyed by seed ^ (r * 0x9E3779B97F4A7C15), so replications can be produced
// in any order or in parallel with identical results.

#include <cmath>
#include <cstdint>

namespace birthflow {

inline constexpr std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

class Xoshiro256 {
 public:
  using result_type = std::uint64_t;

  explicit constexpr Xoshiro256(std::uint64_t key) {
    for (auto& word : s_) word = splitmix64(key);
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  constexpr result_type operator()() {
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

  // Uniform on (0, 1), never exactly 0 or 1.
  double uniform_open() { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

  double exponential(double rate) { return -std::log(uniform_open()) / rate; }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::uint64_t s_[4]{};
};

inline Xoshiro256 replication_stream(std::uint64_t seed, std::uint64_t replication) {
  return Xoshiro256(seed ^ (replication * 0x9E3779B97F4A7C15ull));
}

}  // namespace birthflow
