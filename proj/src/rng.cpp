#include "qsigma/rng.hpp"

#include <bit>
#include <cmath>
#include <numbers>

namespace qsigma {

double Rng::normal() {
  // 1 - u keeps the log argument in (0, 1].
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Rng derive_substream(std::uint64_t master_seed, std::initializer_list<std::uint64_t> labels) {
  std::uint64_t h = splitmix64_mix(master_seed ^ UINT64_C(0x6A09E667F3BCC909));
  for (std::uint64_t label : labels) {
    h = splitmix64_mix(h + UINT64_C(0x9E3779B97F4A7C15) + splitmix64_mix(label));
  }
  return Rng(h);
}

std::uint64_t label_of(double value) {
  // +0.0 and -0.0 name the same grid point.
  if (value == 0.0) value = 0.0;
  return std::bit_cast<std::uint64_t>(value);
}

}  // namespace qsigma
