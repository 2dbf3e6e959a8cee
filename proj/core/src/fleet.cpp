#include "prunebench/fleet.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstring>
#include <numeric>
#include <string>
#include <thread>

#include <json.hpp>

#include <fstream>

#include "prunebench/common.hpp"
#include "prunebench/csv.hpp"
#include "prunebench/rng.hpp"

namespace prunebench {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

int method_order(PruneMethod m) {
    // Output ordering is alphabetical by method name: full, importance, random.
    switch (m) {
        case PruneMethod::Full: return 0;
        case PruneMethod::Importance: return 1;
        case PruneMethod::Random: return 2;
    }
    return 3;
}

std::uint64_t method_ordinal(PruneMethod m) {
    return static_cast<std::uint64_t>(method_order(m));
}

void sort_result(FleetResult& r) {
    std::stable_sort(r.devices.begin(), r.devices.end(), [](const auto& a, const auto& b) {
        if (a.rho != b.rho) return a.rho < b.rho;
        if (method_order(a.method) != method_order(b.method)) {
            return method_order(a.method) < method_order(b.method);
        }
        if (a.seed != b.seed) return a.seed < b.seed;
        return a.device_id < b.device_id;
    });
    std::stable_sort(r.fleet.begin(), r.fleet.end(), [](const auto& a, const auto& b) {
        if (a.rho != b.rho) return a.rho < b.rho;
        if (method_order(a.method) != method_order(b.method)) {
            return method_order(a.method) < method_order(b.method);
        }
        return a.seed < b.seed;
    });
}

struct SeedContext {
    std::uint64_t seed = 0;
    std::vector<DeviceDataset> shards;
    DeviceDataset test_set;
};

Dataset load_corpus(const ExperimentConfig& cfg) {
    Dataset corpus;
    if (cfg.dataset_spec) {
        corpus = generate_synthetic(*cfg.dataset_spec);
    } else {
        corpus = load_dataset(cfg.dataset_path);
    }
    if (cfg.per_sample_bytes > 0) corpus.per_sample_bytes = cfg.per_sample_bytes;
    return corpus;
}

SeedContext make_seed_context(const Dataset& corpus, const ExperimentConfig& cfg,
                              std::uint64_t seed) {
    SeedContext ctx;
    ctx.seed = seed;

    const std::size_t n = corpus.size();
    auto test_count = static_cast<std::size_t>(
        std::floor(cfg.test_fraction * static_cast<double>(n)));
    test_count = std::max<std::size_t>(test_count, 1);
    if (n - test_count < static_cast<std::size_t>(cfg.partition.num_devices)) {
        throw PipelineError("infeasible partition: " +
                            std::to_string(cfg.partition.num_devices) +
                            " devices but only " + std::to_string(n - test_count) +
                            " training samples after the test split");
    }

    Rng split_rng = make_rng(derive_seed(seed, Stream::TestSplit));
    const auto order = shuffled_indices(n, split_rng);
    const std::span<const std::uint32_t> test_rows(order.data(), test_count);
    const std::span<const std::uint32_t> train_rows(order.data() + test_count,
                                                    n - test_count);
    ctx.test_set = as_device(subset(corpus, test_rows), -1);

    PartitionSpec ps = cfg.partition;
    ps.seed = derive_seed(seed, Stream::Partition, cfg.partition.seed);
    ctx.shards = partition(subset(corpus, train_rows), ps);
    return ctx;
}

}  // namespace

void ExperimentConfig::validate() const {
    if (dataset_spec.has_value() == !dataset_path.empty()) {
        throw ConfigError("config must name exactly one of dataset spec or dataset path");
    }
    if (dataset_spec) dataset_spec->validate();
    partition.validate();
    if (hidden_dim < 0) throw ConfigError("model hidden_dim must be >= 0");
    if (warmup.iterations < 0) throw ConfigError("warmup iterations must be >= 0");
    if (warmup.iterations == 0 && warmup.epochs < 1) {
        throw ConfigError("warmup epochs must be >= 1");
    }
    if (warmup.batch_size < 0) throw ConfigError("warmup batch_size must be >= 0");
    train.validate();
    if (!(rho > 0.0) || rho > 1.0) throw ConfigError("pruning rho must be in (0, 1]");
    if (methods.empty()) throw ConfigError("methods list must be non-empty");
    if (profiles.empty()) throw ConfigError("at least one device profile is required");
    if (profiles.size() != 1 &&
        profiles.size() != static_cast<std::size_t>(partition.num_devices)) {
        throw ConfigError("profile list must have exactly 1 or K entries");
    }
    for (const auto& p : profiles) p.validate();
    weights.validate();
    if (seeds.empty()) throw ConfigError("seeds list must be non-empty");
    if (!(test_fraction > 0.0) || !(test_fraction < 1.0)) {
        throw ConfigError("test_fraction must be in (0, 1)");
    }
    if (workers < 1) throw ConfigError("workers must be >= 1");
}

DeviceResult run_device(const DeviceDataset& shard, const DeviceDataset& test_set,
                        const DeviceRunConfig& cfg, PruneMethod method) {
    if (shard.size() == 0) throw PipelineError("run_device: empty shard");
    if (test_set.size() == 0) throw PipelineError("run_device: empty test set");

    DeviceResult res;
    res.device_id = shard.device_id;
    res.method = method;
    res.rho = cfg.rho;
    res.shard_size = shard.size();

    const ModelParams init = init_params(cfg.layout, cfg.init_seed);
    const std::uint64_t c = flops_per_sample(cfg.layout, Pass::ForwardBackward);

    ModelParams start = init;
    DeviceDataset train_shard;
    CostReport cost;

    switch (method) {
        case PruneMethod::Full:
            train_shard = shard;
            break;
        case PruneMethod::Random: {
            const auto mask = select_random(shard.size(), cfg.rho, cfg.mask_seed);
            train_shard = apply_mask(shard, mask);
            cost.select_flops = kSelectFlopsPerSample * shard.size();
            break;
        }
        case PruneMethod::Importance: {
            const auto t0 = Clock::now();
            auto scores = warmup_score(shard, init, cfg.warmup);
            res.scores = normalized_scores(scores);
            res.observe_count = scores.observe_count;
            res.mask = select_top_m(res.scores, cfg.rho);
            res.wall_score_s = seconds_since(t0);
            train_shard = apply_mask(shard, res.mask);
            start = std::move(scores.warm_params);
            cost.score_flops =
                scoring_cost(cfg.warmup.iterations, c,
                             static_cast<std::uint64_t>(cfg.warmup.batch_size), cfg.profile)
                    .score_flops;
            cost.select_flops = kSelectFlopsPerSample * shard.size();
            break;
        }
    }
    res.retained = train_shard.size();

    const auto t1 = Clock::now();
    auto trace = train(start, train_shard, cfg.train, test_set);
    res.wall_train_s = seconds_since(t1);

    const auto train_fragment =
        training_cost(trace.total_steps, c,
                      static_cast<std::uint64_t>(cfg.train.batch_size), cfg.profile);
    cost.train_flops = train_fragment.train_flops;
    cost.latency_s = train_fragment.latency_s;
    cost.energy_J = train_fragment.energy_J;
    cost.steps = train_fragment.steps;
    cost.storage_bytes =
        static_cast<std::uint64_t>(res.retained) * cfg.profile.per_sample_bytes;
    res.cost = cost;

    const auto& last = trace.rows.back();
    res.train_loss = last.train_loss;
    res.train_acc = last.train_acc;
    res.test_loss = last.test_loss;
    res.test_acc = last.test_acc;
    res.trace = std::move(trace.rows);
    return res;
}

FleetResult run_fleet(const ExperimentConfig& cfg, const RunOutputs& out) {
    cfg.validate();
    const Dataset corpus = load_corpus(cfg);

    ModelLayout layout{static_cast<int>(corpus.feature_dim), cfg.hidden_dim,
                       corpus.num_classes};
    layout.validate();

    std::vector<std::uint64_t> seeds = cfg.seeds;
    std::sort(seeds.begin(), seeds.end());
    seeds.erase(std::unique(seeds.begin(), seeds.end()), seeds.end());

    std::vector<SeedContext> contexts;
    contexts.reserve(seeds.size());
    for (const auto s : seeds) contexts.push_back(make_seed_context(corpus, cfg, s));

    std::vector<PruneMethod> methods = cfg.methods;
    std::sort(methods.begin(), methods.end(), [](PruneMethod a, PruneMethod b) {
        return method_order(a) < method_order(b);
    });
    methods.erase(std::unique(methods.begin(), methods.end()), methods.end());

    struct Task {
        std::size_t ctx;
        PruneMethod method;
        int device;
    };
    std::vector<Task> tasks;
    for (std::size_t ci = 0; ci < contexts.size(); ++ci) {
        for (const auto m : methods) {
            for (int k = 0; k < cfg.partition.num_devices; ++k) {
                tasks.push_back({ci, m, k});
            }
        }
    }

    auto run_task = [&](const Task& t) {
        const auto& ctx = contexts[t.ctx];
        const auto& shard = ctx.shards[static_cast<std::size_t>(t.device)];
        const auto dev = static_cast<std::uint64_t>(t.device);

        DeviceRunConfig drc;
        drc.layout = layout;
        drc.rho = cfg.rho;
        drc.profile = cfg.profiles.size() == 1 ? cfg.profiles[0]
                                               : cfg.profiles[static_cast<std::size_t>(t.device)];
        if (drc.profile.per_sample_bytes == 0) {
            drc.profile.per_sample_bytes = shard.per_sample_bytes;
        }
        drc.init_seed = derive_seed(ctx.seed, Stream::ParamInit, dev);
        drc.mask_seed = derive_seed(ctx.seed, Stream::RandomMask, dev);

        drc.train = cfg.train;
        drc.train.seed = derive_seed(ctx.seed, Stream::TrainOrder, dev, method_ordinal(t.method));

        drc.warmup.batch_size =
            cfg.warmup.batch_size > 0 ? cfg.warmup.batch_size : cfg.train.batch_size;
        drc.warmup.iterations =
            cfg.warmup.iterations > 0
                ? cfg.warmup.iterations
                : static_cast<std::int64_t>(cfg.warmup.epochs) *
                      planned_steps(1, static_cast<std::int64_t>(shard.size()),
                                    drc.warmup.batch_size);
        drc.warmup.lr = cfg.warmup.lr;
        drc.warmup.seed = derive_seed(ctx.seed, Stream::WarmupOrder, dev);

        try {
            auto res = run_device(shard, ctx.test_set, drc, t.method);
            res.seed = ctx.seed;
            res.device_cost =
                aggregate_cost(cfg.weights, std::span<const CostReport>(&res.cost, 1));
            return res;
        } catch (const Error& e) {
            throw PipelineError("device " + std::to_string(t.device) + " (" +
                                method_name(t.method) + ", seed " +
                                std::to_string(ctx.seed) + "): " + e.what());
        }
    };

    std::vector<DeviceResult> results(tasks.size());
    const int workers = std::min<int>(cfg.workers, static_cast<int>(tasks.size()));
    if (workers <= 1) {
        for (std::size_t i = 0; i < tasks.size(); ++i) results[i] = run_task(tasks[i]);
    } else {
        std::atomic<std::size_t> next{0};
        std::atomic<std::size_t> first_error{tasks.size()};
        std::vector<std::exception_ptr> errors(tasks.size());
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (;;) {
                    const std::size_t i = next.fetch_add(1);
                    if (i >= tasks.size()) return;
                    try {
                        results[i] = run_task(tasks[i]);
                    } catch (...) {
                        errors[i] = std::current_exception();
                        std::size_t expected = first_error.load();
                        while (i < expected &&
                               !first_error.compare_exchange_weak(expected, i)) {
                        }
                    }
                }
            });
        }
        for (auto& th : pool) th.join();
        if (first_error.load() < tasks.size()) {
            std::rethrow_exception(errors[first_error.load()]);
        }
    }

    FleetResult result;
    result.devices = std::move(results);

    // Aggregate per (method, seed) with p_k = N_k / sum N_j.
    for (std::size_t ci = 0; ci < contexts.size(); ++ci) {
        double total = 0.0;
        for (const auto& s : contexts[ci].shards) total += static_cast<double>(s.size());
        for (const auto m : methods) {
            FleetAggregate agg;
            agg.method = m;
            agg.seed = contexts[ci].seed;
            agg.rho = cfg.rho;
            std::vector<CostReport> reports;
            for (const auto& dr : result.devices) {
                if (dr.seed != contexts[ci].seed || dr.method != m) continue;
                const double pk = static_cast<double>(dr.shard_size) / total;
                agg.fleet_train_acc += pk * dr.train_acc;
                agg.fleet_test_acc += pk * dr.test_acc;
                agg.fleet_test_loss += pk * dr.test_loss;
                agg.latency_s += dr.cost.latency_s;
                agg.energy_J += dr.cost.energy_J;
                agg.storage_bytes += dr.cost.storage_bytes;
                agg.score_flops += dr.cost.score_flops;
                agg.train_flops += dr.cost.train_flops;
                agg.select_flops += dr.cost.select_flops;
                agg.wall_score_s += dr.wall_score_s;
                agg.wall_train_s += dr.wall_train_s;
                reports.push_back(dr.cost);
            }
            agg.aggregate_cost = aggregate_cost(cfg.weights, reports);
            result.fleet.push_back(agg);
        }
    }
    sort_result(result);

    if (!out.dir.empty()) {
        std::filesystem::create_directories(out.dir);
        for (auto& dr : result.devices) {
            if (out.traces) {
                const auto name = "trace_" + std::to_string(dr.device_id) + "_" +
                                  method_name(dr.method) + "_" + std::to_string(dr.seed) +
                                  ".csv";
                TrainingTrace t;
                t.rows = dr.trace;
                t.total_steps = dr.trace.empty() ? 0 : dr.trace.back().step;
                write_trace_csv(t, out.dir / name);
                dr.trace_path = name;
            }
            if (out.scores && dr.method == PruneMethod::Importance) {
                CsvWriter csv("index,score,count,retained");
                for (std::size_t i = 0; i < dr.scores.size(); ++i) {
                    csv.field(static_cast<std::uint64_t>(i))
                        .field(dr.scores[i])
                        .field(static_cast<std::uint64_t>(dr.observe_count[i]))
                        .field(static_cast<std::uint64_t>(dr.mask.retained[i]));
                    csv.end_row();
                }
                const auto name = "scores_" + std::to_string(dr.device_id) + "_" +
                                  std::to_string(dr.seed) + ".csv";
                csv.write(out.dir / name);
            }
        }
    }
    return result;
}

FleetResult sweep_rho(const ExperimentConfig& cfg, std::vector<double> rhos,
                      const std::vector<PruneMethod>& methods, const RunOutputs& out) {
    if (rhos.empty()) throw ConfigError("sweep requires a non-empty rho list");
    for (const auto r : rhos) {
        if (!(r > 0.0) || r > 1.0) {
            throw ConfigError("sweep rho " + fmt_double(r) + " outside (0, 1]");
        }
    }
    std::sort(rhos.begin(), rhos.end());
    rhos.erase(std::unique(rhos.begin(), rhos.end()), rhos.end());

    FleetResult combined;
    for (const auto r : rhos) {
        ExperimentConfig sub = cfg;
        sub.rho = r;
        if (!methods.empty()) sub.methods = methods;
        RunOutputs sub_out = out;
        if (!out.dir.empty()) sub_out.dir = out.dir / ("rho_" + fmt_double(r));
        auto res = run_fleet(sub, sub_out);
        std::move(res.devices.begin(), res.devices.end(),
                  std::back_inserter(combined.devices));
        std::move(res.fleet.begin(), res.fleet.end(), std::back_inserter(combined.fleet));
    }
    sort_result(combined);
    return combined;
}

namespace {

std::vector<const FleetAggregate*> single_method_rows(const FleetResult& r,
                                                      PruneMethod expected) {
    std::vector<const FleetAggregate*> rows;
    for (const auto& agg : r.fleet) {
        if (agg.method != expected) {
            throw PipelineError(std::string("comparison error: expected only ") +
                                method_name(expected) + " rows, found " +
                                method_name(agg.method));
        }
        rows.push_back(&agg);
    }
    if (rows.empty()) {
        throw PipelineError(std::string("comparison error: no ") +
                            method_name(expected) + " rows");
    }
    return rows;
}

}  // namespace

double accuracy_gap(const FleetResult& importance, const FleetResult& random_baseline) {
    const auto imp = single_method_rows(importance, PruneMethod::Importance);
    const auto rnd = single_method_rows(random_baseline, PruneMethod::Random);
    if (imp.size() != rnd.size()) {
        throw PipelineError("comparison error: seed counts differ");
    }
    double gap = 0.0;
    for (std::size_t i = 0; i < imp.size(); ++i) {
        if (imp[i]->seed != rnd[i]->seed || imp[i]->rho != rnd[i]->rho) {
            throw PipelineError("comparison error: mismatched (rho, seed) pairing");
        }
        gap += imp[i]->fleet_test_acc - rnd[i]->fleet_test_acc;
    }
    return gap / static_cast<double>(imp.size());
}

std::vector<GapRow> accuracy_gap_rows(const FleetResult& combined) {
    std::vector<GapRow> rows;
    for (const auto& agg : combined.fleet) {
        if (agg.method != PruneMethod::Importance) continue;
        for (const auto& other : combined.fleet) {
            if (other.method == PruneMethod::Random && other.seed == agg.seed &&
                other.rho == agg.rho) {
                rows.push_back({agg.rho, agg.seed,
                                agg.fleet_test_acc - other.fleet_test_acc});
                break;
            }
        }
    }
    return rows;
}

void write_sweep_csv(const FleetResult& result, const std::filesystem::path& path) {
    CsvWriter csv(
        "rho,method,seed,device,fleet_train_acc,fleet_test_acc,fleet_test_loss,"
        "latency_s,energy_J,storage_bytes,score_flops,train_flops,aggregate_cost");
    auto fleet_it = result.fleet.begin();
    std::size_t di = 0;
    // devices and fleet rows are both sorted by (rho, method, seed); emit each
    // aggregate's device block followed by its fleet row.
    for (; fleet_it != result.fleet.end(); ++fleet_it) {
        const auto& agg = *fleet_it;
        for (; di < result.devices.size(); ++di) {
            const auto& d = result.devices[di];
            if (d.rho != agg.rho || d.method != agg.method || d.seed != agg.seed) break;
            csv.field(d.rho)
                .field(std::string(method_name(d.method)))
                .field(static_cast<std::uint64_t>(d.seed))
                .field(std::to_string(d.device_id))
                .field(d.train_acc)
                .field(d.test_acc)
                .field(d.test_loss)
                .field(d.cost.latency_s)
                .field(d.cost.energy_J)
                .field(d.cost.storage_bytes)
                .field(d.cost.score_flops)
                .field(d.cost.train_flops)
                .field(d.device_cost);
            csv.end_row();
        }
        csv.field(agg.rho)
            .field(std::string(method_name(agg.method)))
            .field(static_cast<std::uint64_t>(agg.seed))
            .field(std::string("fleet"))
            .field(agg.fleet_train_acc)
            .field(agg.fleet_test_acc)
            .field(agg.fleet_test_loss)
            .field(agg.latency_s)
            .field(agg.energy_J)
            .field(agg.storage_bytes)
            .field(agg.score_flops)
            .field(agg.train_flops)
            .field(agg.aggregate_cost);
        csv.end_row();
    }
    csv.write(path);
}

void write_gap_csv(const std::vector<GapRow>& rows, const std::filesystem::path& path) {
    CsvWriter csv("rho,seed,accuracy_gap");
    for (const auto& r : rows) {
        csv.field(r.rho).field(static_cast<std::uint64_t>(r.seed)).field(r.gap);
        csv.end_row();
    }
    csv.write(path);
}

void write_summary_json(const FleetResult& result, const std::filesystem::path& path) {
    nlohmann::json j;
    j["devices"] = nlohmann::json::array();
    for (const auto& d : result.devices) {
        j["devices"].push_back(
            {{"device", d.device_id},
             {"method", method_name(d.method)},
             {"seed", d.seed},
             {"rho", d.rho},
             {"shard_size", d.shard_size},
             {"retained", d.retained},
             {"train_loss", d.train_loss},
             {"train_acc", d.train_acc},
             {"test_loss", d.test_loss},
             {"test_acc", d.test_acc},
             {"cost",
              {{"train_flops", d.cost.train_flops},
               {"score_flops", d.cost.score_flops},
               {"select_flops", d.cost.select_flops},
               {"latency_s", d.cost.latency_s},
               {"energy_J", d.cost.energy_J},
               {"storage_bytes", d.cost.storage_bytes},
               {"steps", d.cost.steps}}},
             {"weighted_cost", d.device_cost}});
    }
    j["fleet"] = nlohmann::json::array();
    for (const auto& a : result.fleet) {
        j["fleet"].push_back({{"method", method_name(a.method)},
                              {"seed", a.seed},
                              {"rho", a.rho},
                              {"fleet_train_acc", a.fleet_train_acc},
                              {"fleet_test_acc", a.fleet_test_acc},
                              {"fleet_test_loss", a.fleet_test_loss},
                              {"latency_s", a.latency_s},
                              {"energy_J", a.energy_J},
                              {"storage_bytes", a.storage_bytes},
                              {"score_flops", a.score_flops},
                              {"train_flops", a.train_flops},
                              {"select_flops", a.select_flops},
                              {"total_flops", a.total_flops()},
                              {"aggregate_cost", a.aggregate_cost}});
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << j.dump(2) << "\n";
    if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace prunebench
