#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace snnconv {

// SplitMix64 (Steele, Lea, Flood 2014). Counter-based: the state advances by
// the golden-ratio increment 0x9E3779B97F4A7C15 and each output is the
// finalizer
//   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//   z =  z ^ (z >> 31)
// applied to the counter. Portable and bit-reproducible everywhere.
class SplitMix64 {
 public:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

  explicit SplitMix64(std::uint64_t seed = 0) noexcept : state_(seed) {}

  static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t next() noexcept {
    state_ += kGamma;
    return mix(state_);
  }

  // Uniform on [0, 1) with 53 bits of resolution.
  double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller; no cached spare so the stream position
  // is a pure function of the number of calls.
  double normal() noexcept {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::uint64_t state() const noexcept { return state_; }

 private:
  std::uint64_t state_;
};

// Independent stream seed for (seed, stream index) pairs, e.g. one per sample.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  return SplitMix64::mix(SplitMix64::mix(seed + SplitMix64::kGamma) ^ (stream * 0xD1B54A32D192ED03ULL + 1));
}

}  // namespace snnconv
