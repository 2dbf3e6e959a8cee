#pragma once

// Analytic resource accounting. Latency and energy follow from FLOP counts
// and the device profile by pure arithmetic, so the identities
// latency = train_flops / throughput and energy = power * latency hold to
// the last bit; nothing here is measured.

#include <cstdint>
#include <span>

namespace prunebench {

struct DeviceProfile {
    double throughput_flops = 1e9;  // f, FLOPs per second
    double power_watts = 1.0;       // P, constant operational power
    std::uint32_t per_sample_bytes = 0;  // sigma-bar; 0 = inherit the dataset's

    void validate() const;
};

struct CostWeights {
    double lambda_tau = 0.0;
    double lambda_energy = 0.0;
    double lambda_storage = 0.0;

    void validate() const;
};

struct CostReport {
    std::uint64_t train_flops = 0;
    std::uint64_t score_flops = 0;
    std::uint64_t select_flops = 0;
    double latency_s = 0.0;  // train_flops / throughput
    double energy_J = 0.0;   // power * latency_s
    std::uint64_t storage_bytes = 0;
    std::int64_t steps = 0;  // training-phase gradient updates

    std::uint64_t total_flops() const {
        return train_flops + score_flops + select_flops;
    }
};

/// Selection is charged a flat 5 FLOP-equivalents per scanned sample to make
/// the linear-time selection term concrete in reports; it is orders of
/// magnitude below the training cost at every default configuration.
inline constexpr std::uint64_t kSelectFlopsPerSample = 5;

/// Per-iteration workload c * b for per-sample cost c and batch size b.
std::uint64_t iter_flops(std::uint64_t c, std::uint64_t b);

/// Training-phase fragment: train_flops = steps * c * b, latency, energy.
CostReport training_cost(std::int64_t steps, std::uint64_t c, std::uint64_t b,
                         const DeviceProfile& profile);

/// Scoring-phase fragment: score_flops = t0 * c * b.
CostReport scoring_cost(std::int64_t t0, std::uint64_t c, std::uint64_t b,
                        const DeviceProfile& profile);

/// lambda_tau * sum(latency) + lambda_E * sum(energy) + lambda_S * sum(storage).
double aggregate_cost(const CostWeights& weights, std::span<const CostReport> per_device);

/// pruned.train_flops / full.train_flops; approx rho by the step-count
/// linearity. Throws PipelineError when the full cost is zero.
double cost_reduction_ratio(const CostReport& pruned, const CostReport& full);

}  // namespace prunebench
