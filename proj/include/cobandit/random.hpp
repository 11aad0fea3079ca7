#pragma once
// Platform-stable random draws: mt19937_64 and seed_seq are fully specified by
// the standard, the distributions in <random> are not.

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace cobandit {

inline std::mt19937_64 seeded_engine(std::uint64_t seed, std::initializer_list<std::uint32_t> stream) {
    std::vector<std::uint32_t> words{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    words.insert(words.end(), stream.begin(), stream.end());
    std::seed_seq seq(words.begin(), words.end());
    return std::mt19937_64(seq);
}

// Uniform on [0, 1) with 53 random bits.
inline double uniform01(std::mt19937_64& g) { return static_cast<double>(g() >> 11) * 0x1.0p-53; }

inline double uniform(std::mt19937_64& g, double lo, double hi) { return lo + (hi - lo) * uniform01(g); }

} // namespace cobandit
