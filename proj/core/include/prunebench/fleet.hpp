#pragma once

// Runs the per-device pipeline (score -> select -> train -> cost) across K
// devices, seeds, and methods; aggregates fleet metrics with data-volume
// weights p_k = N_k / sum N_j. Device runs are embarrassingly parallel and
// merged in a fixed order, so results are identical for any worker count.
//
// Sub-seed derivation from a master seed s: the test split uses
// (s, TestSplit), the partition (s, Partition, partition.seed), and device k
// uses (s, ParamInit, k) for its initial parameters (shared by every
// method), (s, WarmupOrder, k) for warm-up batch order, (s, RandomMask, k)
// for the random baseline, and (s, TrainOrder, k, method) for training
// batch order.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "prunebench/costmodel.hpp"
#include "prunebench/datagen.hpp"
#include "prunebench/model.hpp"
#include "prunebench/pruner.hpp"
#include "prunebench/trainer.hpp"

namespace prunebench {

/// Warm-up knobs as configured; the iteration count is resolved per shard
/// (iterations if nonzero, otherwise whole epochs).
struct WarmupSettings {
    int epochs = 1;
    std::int64_t iterations = 0;  // 0 = use epochs
    int batch_size = 0;           // 0 = inherit the training batch size
    Schedule lr{ScheduleKind::Constant, 0.15, 0.0, 0};
};

struct ExperimentConfig {
    std::optional<DatasetSpec> dataset_spec;  // exactly one of spec / path
    std::filesystem::path dataset_path;
    std::uint32_t per_sample_bytes = 0;  // 0 = keep the dataset default

    PartitionSpec partition;
    int hidden_dim = 32;
    WarmupSettings warmup;
    TrainConfig train;  // .seed is ignored; batch order is derived per device
    double rho = 0.5;
    std::vector<PruneMethod> methods{PruneMethod::Importance, PruneMethod::Random,
                                     PruneMethod::Full};
    std::vector<DeviceProfile> profiles{DeviceProfile{}};  // one shared, or one per device
    CostWeights weights;
    std::vector<std::uint64_t> seeds{1};
    double test_fraction = 0.2;
    int workers = 1;

    void validate() const;
};

/// Everything one device run needs, fully resolved.
struct DeviceRunConfig {
    ModelLayout layout;
    WarmupConfig warmup;  // iterations resolved for this shard
    TrainConfig train;    // seed = derived batch-order seed
    double rho = 1.0;
    DeviceProfile profile;  // per_sample_bytes resolved to nonzero
    std::uint64_t init_seed = 0;
    std::uint64_t mask_seed = 0;
};

struct DeviceResult {
    int device_id = 0;
    PruneMethod method = PruneMethod::Full;
    double rho = 1.0;
    std::uint64_t seed = 0;
    std::size_t shard_size = 0;  // N_k before pruning
    std::size_t retained = 0;    // M_k
    double train_loss = 0.0, train_acc = 0.0;
    double test_loss = 0.0, test_acc = 0.0;
    CostReport cost;
    double device_cost = 0.0;  // lambda-weighted cost of this device alone
    std::vector<TraceRow> trace;
    std::string trace_path;
    double wall_score_s = 0.0;  // measured, not part of deterministic outputs
    double wall_train_s = 0.0;
    std::vector<double> scores;                // normalized scores (importance only)
    std::vector<std::uint32_t> observe_count;  // importance only
    SelectionMask mask;                        // importance only
};

struct FleetAggregate {
    PruneMethod method = PruneMethod::Full;
    std::uint64_t seed = 0;
    double rho = 1.0;
    double fleet_train_acc = 0.0;
    double fleet_test_acc = 0.0;
    double fleet_test_loss = 0.0;
    double latency_s = 0.0;
    double energy_J = 0.0;
    std::uint64_t storage_bytes = 0;
    std::uint64_t score_flops = 0;
    std::uint64_t train_flops = 0;
    std::uint64_t select_flops = 0;
    double aggregate_cost = 0.0;
    double wall_score_s = 0.0;
    double wall_train_s = 0.0;

    std::uint64_t total_flops() const {
        return score_flops + train_flops + select_flops;
    }
};

struct FleetResult {
    std::vector<DeviceResult> devices;   // sorted by (rho, method, seed, device)
    std::vector<FleetAggregate> fleet;   // sorted by (rho, method, seed)
};

struct RunOutputs {
    std::filesystem::path dir;  // empty = keep everything in memory
    bool traces = true;
    bool scores = true;
};

/// Full per-device pipeline for one method. importance: warm-up scoring on
/// the whole shard, top-M selection, training from the warm-up parameters;
/// random: uniform mask, training from the fresh init; full: training on
/// everything from the fresh init.
DeviceResult run_device(const DeviceDataset& shard, const DeviceDataset& test_set,
                        const DeviceRunConfig& cfg, PruneMethod method);

/// Partitions once per seed, runs every configured method on all K devices,
/// and aggregates. Deterministic given the config, for any worker count.
FleetResult run_fleet(const ExperimentConfig& cfg, const RunOutputs& out = {});

/// One fleet run per (rho, method, seed); rows sorted by (rho, method, seed).
FleetResult sweep_rho(const ExperimentConfig& cfg, std::vector<double> rhos,
                      const std::vector<PruneMethod>& methods,
                      const RunOutputs& out = {});

/// Fleet-weighted test accuracy of importance minus random, averaged over
/// matching seeds. Both inputs must hold exactly the expected single method
/// at the same rho and seed set; otherwise throws PipelineError.
double accuracy_gap(const FleetResult& importance, const FleetResult& random_baseline);

struct GapRow {
    double rho = 1.0;
    std::uint64_t seed = 0;
    double gap = 0.0;
};

/// Per-(rho, seed) importance-minus-random gaps from a combined result.
std::vector<GapRow> accuracy_gap_rows(const FleetResult& combined);

/// sweep.csv: one row per device run plus one "fleet" row per aggregate.
/// Columns: rho,method,seed,device,fleet_train_acc,fleet_test_acc,
/// fleet_test_loss,latency_s,energy_J,storage_bytes,score_flops,train_flops,
/// aggregate_cost. Device rows carry that device's metrics in the fleet_*
/// columns.
void write_sweep_csv(const FleetResult& result, const std::filesystem::path& path);

/// gap.csv: rho,seed,accuracy_gap
void write_gap_csv(const std::vector<GapRow>& rows, const std::filesystem::path& path);

/// summary.json: per-device metrics with the complete cost report (including
/// step counts and selection FLOPs) plus the fleet aggregates. Deterministic
/// content; wall-clock measurements are deliberately excluded.
void write_summary_json(const FleetResult& result, const std::filesystem::path& path);

}  // namespace prunebench
