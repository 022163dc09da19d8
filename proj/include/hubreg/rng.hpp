#pragma once

#include <cstdint>
#include <random>

namespace hubreg {

// splitmix64 finalizer: the seed-derivation hash. Replicate k of a run with
// master seed s draws from an engine seeded with derive_seed(s, k), so
// parallel workers use disjoint streams and results never depend on
// scheduling order.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    return splitmix64(master ^ splitmix64(index + 1));
}

// All sampling goes through mt19937_64 (bit-exact across platforms by the
// standard) plus the explicit transforms below; std::*_distribution is
// avoided because its output is implementation-defined.
using Engine = std::mt19937_64;

inline Engine make_engine(std::uint64_t seed) { return Engine(splitmix64(seed)); }

// Uniform on the open interval (0,1): 53-bit mantissa, offset half a ulp so
// 0 and 1 are never returned (inverse-CDF transforms need both ends open).
inline double uniform01(Engine& eng) {
    return (static_cast<double>(eng() >> 11) + 0.5) * 0x1.0p-53;
}

inline double uniform(Engine& eng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(eng);
}

// Box-Muller, cosine branch only; one normal per two uniforms keeps the
// draw count per sample fixed.
inline double standard_normal(Engine& eng) {
    double u1 = uniform01(eng);
    double u2 = uniform01(eng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
}

}  // namespace hubreg
