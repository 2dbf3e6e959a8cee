#include "prunebench/costmodel.hpp"

#include "prunebench/common.hpp"

namespace prunebench {

void DeviceProfile::validate() const {
    if (!(throughput_flops > 0.0)) throw ConfigError("profile throughput must be > 0");
    if (!(power_watts > 0.0)) throw ConfigError("profile power must be > 0");
}

void CostWeights::validate() const {
    if (lambda_tau < 0.0 || lambda_energy < 0.0 || lambda_storage < 0.0) {
        throw ConfigError("cost weights must be >= 0");
    }
}

std::uint64_t iter_flops(std::uint64_t c, std::uint64_t b) { return c * b; }

CostReport training_cost(std::int64_t steps, std::uint64_t c, std::uint64_t b,
                         const DeviceProfile& profile) {
    profile.validate();
    if (steps < 0) throw PipelineError("negative step count");
    CostReport r;
    r.steps = steps;
    r.train_flops = static_cast<std::uint64_t>(steps) * iter_flops(c, b);
    r.latency_s = static_cast<double>(r.train_flops) / profile.throughput_flops;
    r.energy_J = profile.power_watts * r.latency_s;
    return r;
}

CostReport scoring_cost(std::int64_t t0, std::uint64_t c, std::uint64_t b,
                        const DeviceProfile& profile) {
    profile.validate();
    if (t0 < 0) throw PipelineError("negative warm-up step count");
    CostReport r;
    r.score_flops = static_cast<std::uint64_t>(t0) * iter_flops(c, b);
    return r;
}

double aggregate_cost(const CostWeights& weights, std::span<const CostReport> per_device) {
    weights.validate();
    if (per_device.empty()) throw PipelineError("aggregate_cost over empty report list");
    double tau = 0.0, energy = 0.0, storage = 0.0;
    for (const auto& r : per_device) {
        tau += r.latency_s;
        energy += r.energy_J;
        storage += static_cast<double>(r.storage_bytes);
    }
    return weights.lambda_tau * tau + weights.lambda_energy * energy +
           weights.lambda_storage * storage;
}

double cost_reduction_ratio(const CostReport& pruned, const CostReport& full) {
    if (full.train_flops == 0) {
        throw PipelineError("cost reduction ratio undefined: full training cost is zero");
    }
    return static_cast<double>(pruned.train_flops) / static_cast<double>(full.train_flops);
}

}  // namespace prunebench
