#pragma once

// Mini-batch SGD (or Adam) over epoch-shuffled batches of a device shard,
// with a cosine or constant learning-rate schedule, plus evaluation and
// step accounting. A single run is strictly sequential; independent runs
// share no mutable state.

#include <cstdint>
#include <filesystem>
#include <vector>

#include "prunebench/datagen.hpp"
#include "prunebench/model.hpp"

namespace prunebench {

enum class ScheduleKind { Constant, Cosine };

struct Schedule {
    ScheduleKind kind = ScheduleKind::Constant;
    double eta0 = 0.0;
    double eta_min = 0.0;
    std::int64_t horizon = 0;  // total planned steps; 0 = resolve to the run's step count

    Schedule with_horizon(std::int64_t t) const {
        Schedule s = *this;
        s.horizon = t;
        return s;
    }
};

/// Learning rate at step t in [0, horizon]. Constant: eta0. Cosine:
/// eta_min + 0.5*(eta0 - eta_min)*(1 + cos(pi*t/horizon)).
double lr_at(const Schedule& s, std::int64_t t);

/// E * ceil(M / b): exact number of gradient updates for E epochs over M
/// samples at batch size b (the final short batch of each epoch is kept).
std::int64_t planned_steps(std::int64_t epochs, std::int64_t dataset_size,
                           std::int64_t batch_size);

enum class OptimizerKind { Sgd, Adam };

struct AdamSettings {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct TrainConfig {
    int epochs = 1;
    int batch_size = 1;
    Schedule schedule;
    OptimizerKind optimizer = OptimizerKind::Sgd;
    AdamSettings adam;
    std::uint64_t seed = 0;       // batch-order stream
    std::int64_t eval_every = 0;  // 0 = record only the final step

    void validate() const;
};

struct TraceRow {
    std::int64_t step = 0;
    double train_loss = 0.0;
    double train_acc = 0.0;
    double test_loss = 0.0;
    double test_acc = 0.0;
};

struct TrainingTrace {
    std::vector<TraceRow> rows;  // strictly increasing step, always ends at total_steps
    std::int64_t total_steps = 0;
    ModelParams final_params;
};

struct EvalResult {
    double loss = 0.0;
    double accuracy = 0.0;
};

/// Mean sample loss and argmax accuracy (argmax ties go to the lowest
/// class index) over a non-empty dataset.
EvalResult evaluate(const ModelParams& params, const DeviceDataset& data);

/// Runs exactly planned_steps(E, |shard|, b) updates over epoch-shuffled
/// mini-batches of the shard. Deterministic given all inputs. Metrics are
/// recorded every eval_every steps (train metrics on the shard, test
/// metrics on eval_set) and always at the final step.
TrainingTrace train(const ModelParams& init, const DeviceDataset& shard,
                    const TrainConfig& cfg, const DeviceDataset& eval_set);

/// Trace CSV: step,train_loss,train_acc,test_loss,test_acc
void write_trace_csv(const TrainingTrace& trace, const std::filesystem::path& path);

}  // namespace prunebench
