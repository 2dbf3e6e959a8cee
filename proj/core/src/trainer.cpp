#include "prunebench/trainer.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "prunebench/common.hpp"
#include "prunebench/csv.hpp"
#include "prunebench/rng.hpp"

namespace prunebench {

double lr_at(const Schedule& s, std::int64_t t) {
    if (s.horizon < 1) throw ConfigError("schedule horizon must be >= 1");
    if (s.eta0 < 0.0 || s.eta_min < 0.0 || s.eta_min > s.eta0) {
        throw ConfigError("schedule requires 0 <= eta_min <= eta0");
    }
    if (t < 0 || t > s.horizon) {
        throw PipelineError("schedule overrun: step " + std::to_string(t) +
                            " outside [0, " + std::to_string(s.horizon) + "]");
    }
    if (s.kind == ScheduleKind::Constant) return s.eta0;
    const double phase = std::numbers::pi * static_cast<double>(t) /
                         static_cast<double>(s.horizon);
    return s.eta_min + 0.5 * (s.eta0 - s.eta_min) * (1.0 + std::cos(phase));
}

std::int64_t planned_steps(std::int64_t epochs, std::int64_t dataset_size,
                           std::int64_t batch_size) {
    if (epochs < 1 || dataset_size < 1 || batch_size < 1) {
        throw ConfigError("planned_steps arguments must be positive");
    }
    return epochs * ((dataset_size + batch_size - 1) / batch_size);
}

void TrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("train epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("train batch_size must be >= 1");
    if (eval_every < 0) throw ConfigError("train eval_every must be >= 0");
    if (schedule.eta0 < 0.0 || schedule.eta_min < 0.0 ||
        schedule.eta_min > schedule.eta0) {
        throw ConfigError("schedule requires 0 <= eta_min <= eta0");
    }
    if (optimizer == OptimizerKind::Adam) {
        if (adam.beta1 < 0.0 || adam.beta1 >= 1.0 || adam.beta2 < 0.0 ||
            adam.beta2 >= 1.0 || adam.eps <= 0.0) {
            throw ConfigError("adam requires beta1, beta2 in [0,1) and eps > 0");
        }
    }
}

EvalResult evaluate(const ModelParams& params, const DeviceDataset& data) {
    if (data.size() == 0) throw PipelineError("evaluate: empty dataset");
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto probs = forward(params, data.row(i));
        const int y = data.labels[i];
        if (y < 0 || y >= data.num_classes) {
            throw PipelineError("evaluate: label out of range at sample " +
                                std::to_string(i));
        }
        loss_sum += -std::log(probs[static_cast<std::size_t>(y)]);
        std::size_t argmax = 0;
        for (std::size_t k = 1; k < probs.size(); ++k) {
            if (probs[k] > probs[argmax]) argmax = k;  // ties keep the lower index
        }
        if (static_cast<int>(argmax) == y) ++correct;
    }
    const double n = static_cast<double>(data.size());
    return {loss_sum / n, static_cast<double>(correct) / n};
}

TrainingTrace train(const ModelParams& init, const DeviceDataset& shard,
                    const TrainConfig& cfg, const DeviceDataset& eval_set) {
    cfg.validate();
    if (shard.size() == 0) throw PipelineError("train: empty dataset");
    const auto n = static_cast<std::int64_t>(shard.size());
    const std::int64_t total = planned_steps(cfg.epochs, n, cfg.batch_size);
    const Schedule sched =
        cfg.schedule.horizon > 0 ? cfg.schedule : cfg.schedule.with_horizon(total);

    TrainingTrace trace;
    trace.total_steps = total;
    ModelParams params = init;

    // Adam state, lazily unused for SGD.
    std::vector<double> m, v;
    std::int64_t adam_t = 0;
    if (cfg.optimizer == OptimizerKind::Adam) {
        m.assign(params.weights.size(), 0.0);
        v.assign(params.weights.size(), 0.0);
    }

    auto record = [&](std::int64_t step) {
        const auto train_eval = evaluate(params, shard);
        const auto test_eval = evaluate(params, eval_set);
        trace.rows.push_back(
            {step, train_eval.loss, train_eval.accuracy, test_eval.loss, test_eval.accuracy});
    };

    Rng order_rng = make_rng(derive_seed(cfg.seed, Stream::TrainOrder));
    std::int64_t step = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto order = shuffled_indices(shard.size(), order_rng);
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t len =
                std::min(static_cast<std::size_t>(cfg.batch_size), order.size() - start);
            const std::span<const std::uint32_t> batch(order.data() + start, len);
            auto stats = batch_grad_rows(params, shard.features.data(), shard.feature_dim,
                                         shard.labels.data(), batch);
            const double lr = lr_at(sched, step);
            if (cfg.optimizer == OptimizerKind::Sgd) {
                for (std::size_t i = 0; i < params.weights.size(); ++i) {
                    params.weights[i] -= lr * stats.grad[i];
                }
            } else {
                ++adam_t;
                const double bc1 = 1.0 - std::pow(cfg.adam.beta1, static_cast<double>(adam_t));
                const double bc2 = 1.0 - std::pow(cfg.adam.beta2, static_cast<double>(adam_t));
                for (std::size_t i = 0; i < params.weights.size(); ++i) {
                    const double g = stats.grad[i];
                    m[i] = cfg.adam.beta1 * m[i] + (1.0 - cfg.adam.beta1) * g;
                    v[i] = cfg.adam.beta2 * v[i] + (1.0 - cfg.adam.beta2) * g * g;
                    params.weights[i] -=
                        lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + cfg.adam.eps);
                }
            }
            ++step;
            if (cfg.eval_every > 0 && step % cfg.eval_every == 0 && step != total) {
                record(step);
            }
        }
    }
    record(total);
    trace.final_params = std::move(params);
    return trace;
}

void write_trace_csv(const TrainingTrace& trace, const std::filesystem::path& path) {
    CsvWriter csv("step,train_loss,train_acc,test_loss,test_acc");
    for (const auto& row : trace.rows) {
        csv.field(row.step)
            .field(row.train_loss)
            .field(row.train_acc)
            .field(row.test_loss)
            .field(row.test_acc);
        csv.end_row();
    }
    csv.write(path);
}

}  // namespace prunebench
