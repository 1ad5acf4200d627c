#pragma once

#include <cstdint>

namespace uavnet {

/// splitmix64: tiny counter-style PRNG used for reproducible, platform-stable
/// streams (std distributions are implementation-defined).
struct SplitMix64 {
    std::uint64_t state;

    explicit SplitMix64(std::uint64_t seed) : state(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1).
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }
};

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    SplitMix64 s(a ^ (0x9E3779B97F4A7C15ULL + (b << 6) + (b >> 2)));
    s.next_u64();
    return s.next_u64();
}

}  // namespace uavnet
