#pragma once

#include <cstdint>
#include <random>

namespace rrg {

// 64-bit Mersenne twister. Its output sequence is fixed by the standard, and the
// helpers below avoid the implementation-defined std distributions, so a seed
// reproduces the same stream on every platform.
using Rng = std::mt19937_64;

// Independent stream for (seed, stream index), e.g. one per sample or task.
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                      0x9e3779b9u};
    return Rng(seq);
}

// Uniform integer in [0, n), n > 0, by rejection.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
    // [threshold, 2^64) holds a whole number of copies of [0, n).
    const std::uint64_t threshold = (0 - n) % n;
    std::uint64_t x = rng();
    while (x < threshold) x = rng();
    return x % n;
}

// Uniform double in [0, 1).
inline double uniform_real(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace rrg
