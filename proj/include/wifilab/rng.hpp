#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace wifilab {

// SplitMix64 finalizer. Used to derive independent substreams from one master
// seed: stream k of seed s is seeded with mix64(s ^ mix64(k)). Attempts,
// trees and per-phase latency draws each get their own stream so that results
// do not depend on evaluation order or scheduling.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    return mix64(seed ^ mix64(stream));
}

inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
    return std::mt19937_64(derive_seed(seed, stream));
}

// The samplers below deliberately avoid std::*_distribution: the engine is
// pinned down by the standard, the distributions are not, and corpora must be
// byte-identical across toolchains.

// Uniform double in [0, 1), 53 bits.
inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline bool bernoulli(std::mt19937_64& rng, double p) {
    if (p <= 0.0) {
        (void)rng();  // keep stream alignment independent of p
        return false;
    }
    if (p >= 1.0) {
        (void)rng();
        return true;
    }
    return uniform01(rng) < p;
}

// Uniform integer in [lo, hi], inclusive.
inline std::int64_t uniform_int(std::mt19937_64& rng, std::int64_t lo, std::int64_t hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    auto k = static_cast<std::uint64_t>(uniform01(rng) * static_cast<double>(span));
    if (k >= span) k = span - 1;
    return lo + static_cast<std::int64_t>(k);
}

inline constexpr double kTwoPi = 6.283185307179586476925287;

// Standard normal via Box-Muller, cosine branch only. Always consumes exactly
// two engine outputs so parallel streams stay aligned.
inline double standard_normal(std::mt19937_64& rng) {
    double u1 = uniform01(rng);
    const double u2 = uniform01(rng);
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

inline double lognormal(std::mt19937_64& rng, double median, double sigma) {
    return median * std::exp(sigma * standard_normal(rng));
}

// In-place Fisher-Yates with our own index draws (std::shuffle's draw sequence
// is implementation-defined).
template <typename T>
void deterministic_shuffle(std::vector<T>& v, std::mt19937_64& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(i) - 1));
        std::swap(v[i - 1], v[j]);
    }
}

}  // namespace wifilab
