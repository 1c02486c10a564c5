#pragma once

#include <cstdint>

namespace ddclock {

// SplitMix64 (Steele/Lea/Vigna). Chosen over std::mt19937_64 +
// std::bernoulli_distribution because the standard library leaves
// distribution algorithms unspecified; this generator plus the explicit
// 53-bit uniform mapping below is reproducible bit-for-bit in any language.
class SplitMix64 {
  public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform double in [0, 1) from the top 53 bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  private:
    std::uint64_t state_;
};

}  // namespace ddclock
