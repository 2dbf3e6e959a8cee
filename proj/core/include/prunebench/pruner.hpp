#pragma once

// Importance-based dataset pruning: a truncated warm-up phase accumulates
// per-sample losses while running plain SGD on the full shard, and the
// top-M samples by normalized score are retained deterministically.
// A uniform-random mask provides the baseline.

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "prunebench/datagen.hpp"
#include "prunebench/model.hpp"
#include "prunebench/trainer.hpp"

namespace prunebench {

struct WarmupConfig {
    std::int64_t iterations = 0;  // T0, SGD steps; must span >= 1 full epoch
    int batch_size = 1;
    Schedule lr;  // warm-up is always plain SGD
    std::uint64_t seed = 0;

    void validate() const;
};

/// Accumulated warm-up statistics for one shard. loss_sum[n] is the sum of
/// the sample's losses at the pre-update parameters of every iteration that
/// observed it; observe_count[n] is how many times it was observed.
struct ImportanceScores {
    std::vector<double> loss_sum;
    std::vector<std::uint32_t> observe_count;
    ModelParams warm_params;  // parameters after the T0 warm-up updates
};

enum class PruneMethod { Importance, Random, Full };

const char* method_name(PruneMethod m);
PruneMethod method_from_name(const std::string& name);  // throws ConfigError

struct PruningConfig {
    double rho = 1.0;  // fraction retained, in (0, 1]
    PruneMethod method = PruneMethod::Importance;
    std::uint64_t random_seed = 0;  // used by PruneMethod::Random

    void validate() const;
};

/// Retention vector with exactly M = floor(rho * N) true entries.
struct SelectionMask {
    std::vector<std::uint8_t> retained;
    std::size_t M = 0;

    std::size_t size() const { return retained.size(); }
};

/// floor(rho * N); throws PipelineError when the result would be 0
/// (training on an empty subset is undefined) or rho is out of (0, 1].
std::size_t retained_count(double rho, std::size_t n);

/// Phase 1: runs exactly cfg.iterations SGD updates over epoch-shuffled
/// mini-batches of the full shard. Each iteration adds every batch member's
/// loss at the pre-update parameters to its loss_sum (reusing the gradient
/// computation's forward pass) and bumps its observe_count. Deterministic
/// given (shard, init, cfg).
ImportanceScores warmup_score(const DeviceDataset& shard, const ModelParams& init,
                              const WarmupConfig& cfg);

/// alpha_n = loss_sum[n] / observe_count[n]. Throws PipelineError naming the
/// first index whose observe_count is 0 (warm-up must span >= 1 epoch).
std::vector<double> normalized_scores(const ImportanceScores& scores);

/// Phase 2: retains the M = floor(rho * N) samples that come first under the
/// total order (score descending, index ascending on ties), in expected O(N)
/// time via partial selection.
SelectionMask select_top_m(std::span<const double> scores, double rho);

/// Baseline: M indices drawn uniformly without replacement.
SelectionMask select_random(std::size_t n, double rho, std::uint64_t seed);

/// Retained samples in original index order, as a new shard of size M.
DeviceDataset apply_mask(const DeviceDataset& shard, const SelectionMask& mask);

/// Audit export: index,score,count,retained (one row per sample).
void write_scores_csv(const ImportanceScores& scores, const SelectionMask& mask,
                      const std::filesystem::path& path);

}  // namespace prunebench
