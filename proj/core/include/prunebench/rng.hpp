#pragma once

// Deterministic randomness. The mt19937_64 engine output is pinned by the
// C++ standard, but the standard library *distributions* are not, so every
// distribution used here is hand-rolled on top of raw engine draws. Results
// are therefore bit-identical across compilers and platforms.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

namespace prunebench {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; used both as a mixer and to expand seeds.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Independent RNG streams are derived from a master seed plus a stream
/// label and up to two integer coordinates (device id, method ordinal, ...).
/// The chain of mix64 rounds keeps streams decorrelated and reproducible.
enum class Stream : std::uint64_t {
    ParamInit = 1,
    DataGen = 2,
    LabelNoise = 3,
    Partition = 4,
    TestSplit = 5,
    WarmupOrder = 6,
    TrainOrder = 7,
    RandomMask = 8,
};

constexpr std::uint64_t derive_seed(std::uint64_t master, Stream stream,
                                    std::uint64_t a = 0, std::uint64_t b = 0) {
    std::uint64_t h = mix64(master);
    h = mix64(h ^ static_cast<std::uint64_t>(stream));
    h = mix64(h ^ a);
    h = mix64(h ^ b);
    return h;
}

inline Rng make_rng(std::uint64_t seed) { return Rng(mix64(seed)); }

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform double in [lo, hi).
inline double uniform_real(Rng& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
}

/// Uniform integer in [0, n). n must be positive. The modulo bias is
/// below n / 2^64, irrelevant at the sizes used here.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
    return rng() % n;
}

/// Standard normal via Box-Muller. Draws exactly two engine values.
inline double gaussian(Rng& rng) {
    double u1 = uniform01(rng);
    double u2 = uniform01(rng);
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
}

/// Gamma(alpha, 1) via Marsaglia-Tsang, with the boost for alpha < 1.
double gamma_sample(Rng& rng, double alpha);

/// Dirichlet(alpha, ..., alpha) over k components.
std::vector<double> dirichlet_sample(Rng& rng, double alpha, std::size_t k);

/// Fisher-Yates shuffle (in place), deterministic given the stream.
template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(uniform_index(rng, i));
        std::swap(v[i - 1], v[j]);
    }
}

/// 0..n-1 shuffled.
std::vector<std::uint32_t> shuffled_indices(std::size_t n, Rng& rng);

}  // namespace prunebench
