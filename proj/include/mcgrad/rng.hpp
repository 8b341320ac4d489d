#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace mcgrad::rng {

// Counter-based pseudo-random scheme: every draw is a pure function of
// (seed, index, dim, stream), so batch results do not depend on evaluation
// order or worker count. The mixer is the splitmix64 finalizer.
inline std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline std::uint64_t word(std::uint64_t seed, std::uint64_t index,
                          std::uint64_t dim = 0, std::uint64_t stream = 0) {
    std::uint64_t h = mix(seed);
    h = mix(h ^ (index + 0x632be59bd9b4e019ull));
    h = mix(h ^ (dim + 0xd6e8feb86659fd93ull));
    h = mix(h ^ (stream + 0xa5cb3a1ed85c04c5ull));
    return h;
}

// Uniform on the open interval (0, 1): 53-bit mantissa, never returns 0 or 1.
inline double uniform01(std::uint64_t seed, std::uint64_t index,
                        std::uint64_t dim = 0, std::uint64_t stream = 0) {
    const std::uint64_t w = word(seed, index, dim, stream);
    return (static_cast<double>(w >> 11) + 0.5) * 0x1.0p-53;
}

// Standard normal via Box-Muller on two independent counter-derived uniforms.
inline double normal(std::uint64_t seed, std::uint64_t index,
                     std::uint64_t dim = 0, std::uint64_t stream = 0) {
    const double u1 = uniform01(seed, index, dim, 2 * stream);
    const double u2 = uniform01(seed, index, dim, 2 * stream + 1);
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
}

// Fair coin returning +1 or -1.
inline int sign(std::uint64_t seed, std::uint64_t index,
                std::uint64_t dim = 0, std::uint64_t stream = 0) {
    return (word(seed, index, dim, stream) & 1ull) ? 1 : -1;
}

// Derives an independent sub-seed, e.g. for per-replicate or pilot batches.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
    return mix(mix(seed) ^ (tag + 0x94d049bb133111ebull));
}

}  // namespace mcgrad::rng
