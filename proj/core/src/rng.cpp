#include "prunebench/rng.hpp"

#include <numeric>

namespace prunebench {

double gamma_sample(Rng& rng, double alpha) {
    if (alpha < 1.0) {
        // Gamma(a) = Gamma(a+1) * U^(1/a)
        double u = uniform01(rng);
        if (u <= 0.0) u = 0x1.0p-53;
        return gamma_sample(rng, alpha + 1.0) * std::pow(u, 1.0 / alpha);
    }
    const double d = alpha - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x = gaussian(rng);
        double v = 1.0 + c * x;
        if (v <= 0.0) continue;
        v = v * v * v;
        double u = uniform01(rng);
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
        if (u <= 0.0) u = 0x1.0p-53;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

std::vector<double> dirichlet_sample(Rng& rng, double alpha, std::size_t k) {
    std::vector<double> p(k);
    double total = 0.0;
    for (auto& v : p) {
        v = gamma_sample(rng, alpha);
        total += v;
    }
    if (total <= 0.0) {
        // all-underflow corner: fall back to uniform
        for (auto& v : p) v = 1.0 / static_cast<double>(k);
        return p;
    }
    for (auto& v : p) v /= total;
    return p;
}

std::vector<std::uint32_t> shuffled_indices(std::size_t n, Rng& rng) {
    std::vector<std::uint32_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0u);
    shuffle(idx, rng);
    return idx;
}

}  // namespace prunebench
