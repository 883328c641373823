#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace lpp {

using Engine = std::mt19937_64;

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

//! Seed of the independent substream `index` derived from a master seed.
//! Counter based, so replica r always sees the same stream no matter which
//! thread runs it.
inline constexpr std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index) noexcept {
    return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
}

inline Engine make_engine(std::uint64_t seed, std::uint64_t index = 0) {
    return Engine{substream_seed(seed, index)};
}

//! Uniform double in [0, 1) built from the top 53 bits; fully specified,
//! unlike std::uniform_real_distribution.
inline double uniform01(Engine& eng) noexcept {
    return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

} // namespace lpp
