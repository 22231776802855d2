#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>

namespace qsigma {

// SplitMix64 finalizer. Used for seeding and for mixing substream labels.
constexpr std::uint64_t splitmix64_mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * UINT64_C(0xBF58476D1CE4E5B9);
  z = (z ^ (z >> 27)) * UINT64_C(0x94D049BB133111EB);
  return z ^ (z >> 31);
}

/// xoshiro256** stream. Every sampled action and environment transition in the
/// library is drawn from one of these, so a stream state fully determines a
/// trajectory.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0) { reseed(seed); }

  void reseed(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& word : state_) {
      x += UINT64_C(0x9E3779B97F4A7C15);
      word = splitmix64_mix(x);
    }
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform double in [0, 1) with 53 random bits. Consumes one draw.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n). Consumes one draw.
  std::uint64_t below(std::uint64_t n) {
    const auto k = static_cast<std::uint64_t>(uniform() * static_cast<double>(n));
    return k < n ? k : n - 1;
  }

  /// Standard normal via Box-Muller. Consumes two draws.
  double normal();

  bool operator==(const Rng&) const = default;

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::array<std::uint64_t, 4> state_{};
};

/// Independent stream for a labelled unit of work. The labels are folded into
/// the master seed one at a time, so the same (seed, labels) always yields the
/// same stream and any change in a label yields an unrelated one.
Rng derive_substream(std::uint64_t master_seed, std::initializer_list<std::uint64_t> labels);

/// Bit pattern of a double, for using real-valued grid coordinates as labels.
std::uint64_t label_of(double value);

}  // namespace qsigma
