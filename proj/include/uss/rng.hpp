#pragma once

// Counter-based 64-bit generator (splitmix64) used everywhere randomness is
// needed. Chosen for reproducibility: the k-th output depends only on
// (seed, k), so batch runs can be sharded across threads and still produce
// the same streams as a sequential run.

#include <cstdint>

namespace uss::rng {

inline constexpr std::uint64_t golden_gamma = 0x9E3779B97F4A7C15ULL;

// Finalizer with full avalanche; bijective on 64-bit words.
inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

class SplitMix64 {
  public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += golden_gamma;
        return mix64(state_);
    }

    // Uniform double in [0,1), 53 random bits.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform integer in [0, bound) by rejection; bound >= 1.
    std::uint64_t next_below(std::uint64_t bound) {
        const std::uint64_t limit = bound * (UINT64_MAX / bound);
        for (;;) {
            const std::uint64_t z = next_u64();
            if (z < limit) return z % bound;
        }
    }

  private:
    std::uint64_t state_;
};

// Seed for run j of a batch: the j-th output of the splitmix64 stream seeded
// with base_seed. Documented contract; changing it changes every batch.
inline std::uint64_t run_seed(std::uint64_t base_seed, std::uint64_t run_index) {
    return mix64(base_seed + (run_index + 1) * golden_gamma);
}

} // namespace uss::rng
