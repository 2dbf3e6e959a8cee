#include "prunebench/pruner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "prunebench/common.hpp"
#include "prunebench/csv.hpp"
#include "prunebench/rng.hpp"

namespace prunebench {

void WarmupConfig::validate() const {
    if (iterations < 1) throw ConfigError("warmup iterations must be >= 1");
    if (batch_size < 1) throw ConfigError("warmup batch_size must be >= 1");
    if (lr.eta0 < 0.0 || lr.eta_min < 0.0 || lr.eta_min > lr.eta0) {
        throw ConfigError("warmup schedule requires 0 <= eta_min <= eta0");
    }
}

const char* method_name(PruneMethod m) {
    switch (m) {
        case PruneMethod::Importance: return "importance";
        case PruneMethod::Random: return "random";
        case PruneMethod::Full: return "full";
    }
    return "?";
}

PruneMethod method_from_name(const std::string& name) {
    if (name == "importance") return PruneMethod::Importance;
    if (name == "random") return PruneMethod::Random;
    if (name == "full") return PruneMethod::Full;
    throw ConfigError("unknown pruning method '" + name +
                      "' (expected importance, random, or full)");
}

void PruningConfig::validate() const {
    if (!(rho > 0.0) || rho > 1.0) throw ConfigError("pruning rho must be in (0, 1]");
}

std::size_t retained_count(double rho, std::size_t n) {
    if (!(rho > 0.0) || rho > 1.0) {
        throw PipelineError("rho must be in (0, 1], got " + fmt_double(rho));
    }
    if (n == 0) throw PipelineError("selection over an empty shard");
    const auto m = static_cast<std::size_t>(
        std::floor(rho * static_cast<double>(n)));
    if (m == 0) {
        throw PipelineError("empty selection: floor(rho*N) = 0 for rho = " +
                            fmt_double(rho) + ", N = " + std::to_string(n));
    }
    return m;
}

ImportanceScores warmup_score(const DeviceDataset& shard, const ModelParams& init,
                              const WarmupConfig& cfg) {
    cfg.validate();
    const std::size_t n = shard.size();
    if (n == 0) throw PipelineError("warmup: empty shard");
    if (static_cast<std::size_t>(cfg.batch_size) > n) {
        throw PipelineError("warmup batch size " + std::to_string(cfg.batch_size) +
                            " exceeds shard size " + std::to_string(n));
    }
    const std::int64_t steps_per_epoch = planned_steps(1, static_cast<std::int64_t>(n),
                                                       cfg.batch_size);
    if (cfg.iterations < steps_per_epoch) {
        throw ConfigError("warmup iterations (" + std::to_string(cfg.iterations) +
                          ") must span at least one full epoch (" +
                          std::to_string(steps_per_epoch) +
                          " steps), or some samples would go unscored");
    }
    const Schedule sched =
        cfg.lr.horizon > 0 ? cfg.lr : cfg.lr.with_horizon(cfg.iterations);

    ImportanceScores out;
    out.loss_sum.assign(n, 0.0);
    out.observe_count.assign(n, 0);
    ModelParams params = init;

    Rng order_rng = make_rng(derive_seed(cfg.seed, Stream::WarmupOrder));
    std::int64_t step = 0;
    std::vector<std::uint32_t> order;
    std::size_t pos = 0;
    while (step < cfg.iterations) {
        if (pos == order.size()) {  // next epoch
            order = shuffled_indices(n, order_rng);
            pos = 0;
        }
        const std::size_t len =
            std::min(static_cast<std::size_t>(cfg.batch_size), order.size() - pos);
        const std::span<const std::uint32_t> batch(order.data() + pos, len);
        pos += len;

        // One forward-backward pass; the per-sample losses are evaluated at
        // the pre-update parameters and feed the score accumulators.
        auto stats = batch_grad_rows(params, shard.features.data(), shard.feature_dim,
                                     shard.labels.data(), batch);
        for (std::size_t i = 0; i < batch.size(); ++i) {
            out.loss_sum[batch[i]] += stats.sample_losses[i];
            out.observe_count[batch[i]] += 1;
        }
        const double lr = lr_at(sched, step);
        for (std::size_t i = 0; i < params.weights.size(); ++i) {
            params.weights[i] -= lr * stats.grad[i];
        }
        ++step;
    }
    out.warm_params = std::move(params);
    return out;
}

std::vector<double> normalized_scores(const ImportanceScores& scores) {
    if (scores.loss_sum.size() != scores.observe_count.size()) {
        throw PipelineError("importance scores: sum/count length mismatch");
    }
    std::vector<double> alpha(scores.loss_sum.size());
    for (std::size_t i = 0; i < alpha.size(); ++i) {
        if (scores.observe_count[i] == 0) {
            throw PipelineError("sample " + std::to_string(i) +
                                " was never observed during warm-up; "
                                "T0 must cover at least one full epoch");
        }
        alpha[i] = scores.loss_sum[i] / static_cast<double>(scores.observe_count[i]);
    }
    return alpha;
}

SelectionMask select_top_m(std::span<const double> scores, double rho) {
    const std::size_t n = scores.size();
    const std::size_t m = retained_count(rho, n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(scores[i])) {
            throw PipelineError("non-finite importance score at index " +
                                std::to_string(i));
        }
    }
    // Total order: score descending, index ascending on ties. nth_element
    // (introselect) gives the expected-O(N) partial selection.
    std::vector<std::uint32_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0u);
    const auto before = [&scores](std::uint32_t a, std::uint32_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    };
    if (m < n) {
        std::nth_element(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(m),
                         idx.end(), before);
    }
    SelectionMask mask;
    mask.retained.assign(n, 0);
    mask.M = m;
    for (std::size_t i = 0; i < m; ++i) mask.retained[idx[i]] = 1;
    return mask;
}

SelectionMask select_random(std::size_t n, double rho, std::uint64_t seed) {
    const std::size_t m = retained_count(rho, n);
    Rng rng = make_rng(derive_seed(seed, Stream::RandomMask));
    // Partial Fisher-Yates: the first m entries are a uniform sample
    // without replacement.
    std::vector<std::uint32_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0u);
    for (std::size_t i = 0; i < m; ++i) {
        const auto j = i + static_cast<std::size_t>(uniform_index(rng, n - i));
        std::swap(idx[i], idx[j]);
    }
    SelectionMask mask;
    mask.retained.assign(n, 0);
    mask.M = m;
    for (std::size_t i = 0; i < m; ++i) mask.retained[idx[i]] = 1;
    return mask;
}

DeviceDataset apply_mask(const DeviceDataset& shard, const SelectionMask& mask) {
    if (mask.size() != shard.size()) {
        throw PipelineError("mask length " + std::to_string(mask.size()) +
                            " does not match shard size " + std::to_string(shard.size()));
    }
    DeviceDataset out;
    out.device_id = shard.device_id;
    out.feature_dim = shard.feature_dim;
    out.num_classes = shard.num_classes;
    out.per_sample_bytes = shard.per_sample_bytes;
    out.features.reserve(mask.M * shard.feature_dim);
    out.labels.reserve(mask.M);
    for (std::size_t i = 0; i < shard.size(); ++i) {
        if (!mask.retained[i]) continue;
        const auto row = shard.row(i);
        out.features.insert(out.features.end(), row.begin(), row.end());
        out.labels.push_back(shard.labels[i]);
    }
    return out;
}

void write_scores_csv(const ImportanceScores& scores, const SelectionMask& mask,
                      const std::filesystem::path& path) {
    if (mask.size() != scores.loss_sum.size()) {
        throw PipelineError("scores/mask length mismatch");
    }
    const auto alpha = normalized_scores(scores);
    CsvWriter csv("index,score,count,retained");
    for (std::size_t i = 0; i < alpha.size(); ++i) {
        csv.field(static_cast<std::uint64_t>(i))
            .field(alpha[i])
            .field(static_cast<std::uint64_t>(scores.observe_count[i]))
            .field(static_cast<std::uint64_t>(mask.retained[i]));
        csv.end_row();
    }
    csv.write(path);
}

}  // namespace prunebench
