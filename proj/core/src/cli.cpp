#include "prunebench/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>

#include "prunebench/common.hpp"
#include "prunebench/config.hpp"
#include "prunebench/csv.hpp"
#include "prunebench/datagen.hpp"
#include "prunebench/fleet.hpp"

namespace prunebench::cli {

namespace {

template <typename F>
int guard(const char* what, F&& body) {
    try {
        return body();
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "%s: %s\n", what, e.what());
        return kExitConfig;
    } catch (const IoError& e) {
        std::fprintf(stderr, "%s: %s\n", what, e.what());
        return kExitIo;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "%s: %s\n", what, e.what());
        return kExitPipeline;
    }
}

void apply_overrides(ExperimentConfig& cfg, const Overrides& ov) {
    if (ov.workers > 0) cfg.workers = ov.workers;
    if (!ov.seeds.empty()) cfg.seeds = ov.seeds;
}

void print_fleet_summary(const FleetResult& result) {
    std::printf("%8s %-11s %6s %12s %12s %12s\n", "rho", "method", "seed",
                "test_acc", "test_loss", "latency_s");
    for (const auto& agg : result.fleet) {
        std::printf("%8.3f %-11s %6llu %12.4f %12.4f %12.4f\n", agg.rho,
                    method_name(agg.method), static_cast<unsigned long long>(agg.seed),
                    agg.fleet_test_acc, agg.fleet_test_loss, agg.latency_s);
    }
}

bool has_method(const ExperimentConfig& cfg, PruneMethod m) {
    return std::find(cfg.methods.begin(), cfg.methods.end(), m) != cfg.methods.end();
}

}  // namespace

int cmd_gen_data(const std::filesystem::path& spec_path,
                 const std::filesystem::path& out_path) {
    return guard("gen-data", [&] {
        const auto spec = parse_dataset_spec(spec_path);
        const auto data = generate_synthetic(spec);
        save_dataset(data, out_path);

        std::vector<std::size_t> hist(static_cast<std::size_t>(data.num_classes), 0);
        for (const auto y : data.labels) hist[static_cast<std::size_t>(y)]++;
        std::printf("wrote %s: %zu samples, %zu features, %d classes, %u bytes/sample\n",
                    out_path.string().c_str(), data.size(), data.feature_dim,
                    data.num_classes, data.per_sample_bytes);
        std::printf("class histogram:");
        for (std::size_t c = 0; c < hist.size(); ++c) {
            std::printf(" %zu:%zu", c, hist[c]);
        }
        std::printf("\n");
        return kExitOk;
    });
}

int cmd_run(const std::filesystem::path& config_path,
            const std::filesystem::path& out_dir, const Overrides& ov) {
    return guard("run", [&] {
        auto cfg = parse_config(config_path);
        apply_overrides(cfg, ov);
        std::filesystem::create_directories(out_dir);

        const auto result = run_fleet(cfg, RunOutputs{out_dir, true, true});
        write_sweep_csv(result, out_dir / "sweep.csv");

        std::vector<std::string> outputs{"sweep.csv"};
        for (const auto& d : result.devices) {
            if (!d.trace_path.empty()) outputs.push_back(d.trace_path);
        }
        write_manifest(make_manifest(cfg, "run", std::move(outputs)),
                       out_dir / "manifest.json");
        print_fleet_summary(result);
        return kExitOk;
    });
}

int cmd_sweep(const std::filesystem::path& config_path, const std::vector<double>& rhos,
              const std::filesystem::path& out_dir, const Overrides& ov) {
    return guard("sweep", [&] {
        if (rhos.empty()) {
            throw ConfigError("sweep requires --rhos with at least one value");
        }
        auto cfg = parse_config(config_path);
        apply_overrides(cfg, ov);
        std::filesystem::create_directories(out_dir);

        const auto result = sweep_rho(cfg, rhos, cfg.methods, RunOutputs{out_dir, true, true});
        write_sweep_csv(result, out_dir / "sweep.csv");
        std::vector<std::string> outputs{"sweep.csv"};
        if (has_method(cfg, PruneMethod::Importance) && has_method(cfg, PruneMethod::Random)) {
            write_gap_csv(accuracy_gap_rows(result), out_dir / "gap.csv");
            outputs.push_back("gap.csv");
        }
        write_manifest(make_manifest(cfg, "sweep", std::move(outputs)),
                       out_dir / "manifest.json");
        print_fleet_summary(result);
        return kExitOk;
    });
}

int cmd_report(const std::filesystem::path& out_dir) {
    return guard("report", [&] {
        const auto table = read_csv(out_dir / "sweep.csv");
        const std::vector<std::string> expected = {
            "rho",          "method",        "seed",        "device",
            "fleet_train_acc", "fleet_test_acc", "fleet_test_loss", "latency_s",
            "energy_J",     "storage_bytes", "score_flops", "train_flops",
            "aggregate_cost"};
        if (table.header != expected) {
            throw IoError("sweep.csv: unexpected column layout");
        }
        const auto c_rho = table.col("rho");
        const auto c_method = table.col("method");
        const auto c_seed = table.col("seed");
        const auto c_device = table.col("device");
        const auto c_tacc = table.col("fleet_test_acc");
        const auto c_tloss = table.col("fleet_test_loss");
        const auto c_lat = table.col("latency_s");
        const auto c_energy = table.col("energy_J");
        const auto c_tflops = table.col("train_flops");

        struct Key {
            double rho;
            std::string method;
            bool operator<(const Key& o) const {
                if (rho != o.rho) return rho < o.rho;
                return method < o.method;
            }
        };
        struct Acc {
            double test_acc = 0, test_loss = 0, latency = 0, energy = 0, train_flops = 0;
            std::size_t n = 0;
            std::map<std::uint64_t, double> acc_by_seed;
            std::map<std::uint64_t, double> flops_by_seed;
        };
        std::map<Key, Acc> fleet;
        std::map<Key, std::map<std::uint64_t, std::size_t>> device_rows;

        for (const auto& row : table.rows) {
            const Key key{csv_double(row[c_rho]), row[c_method]};
            const auto seed = csv_u64(row[c_seed]);
            if (row[c_device] == "fleet") {
                auto& a = fleet[key];
                a.test_acc += csv_double(row[c_tacc]);
                a.test_loss += csv_double(row[c_tloss]);
                a.latency += csv_double(row[c_lat]);
                a.energy += csv_double(row[c_energy]);
                a.train_flops += static_cast<double>(csv_u64(row[c_tflops]));
                a.n += 1;
                a.acc_by_seed[seed] = csv_double(row[c_tacc]);
                a.flops_by_seed[seed] = static_cast<double>(csv_u64(row[c_tflops]));
            } else {
                csv_u64(row[c_device]);  // device rows must carry an integer id
                device_rows[key][seed] += 1;
            }
        }
        if (fleet.empty()) throw IoError("sweep.csv: no fleet rows");

        // Structural audit: every (rho, method, seed) block must have the same
        // number of device rows, and every fleet row its device block.
        std::size_t devices_per_block = 0;
        for (const auto& [key, acc] : fleet) {
            const auto it = device_rows.find(key);
            if (it == device_rows.end() || it->second.size() != acc.n) {
                throw IoError("sweep.csv: device rows missing for rho=" +
                              fmt_double(key.rho) + " method=" + key.method);
            }
            for (const auto& [seed, count] : it->second) {
                if (devices_per_block == 0) devices_per_block = count;
                if (count != devices_per_block) {
                    throw IoError("sweep.csv: inconsistent device row count (" +
                                  std::to_string(count) + " vs " +
                                  std::to_string(devices_per_block) + ") at rho=" +
                                  fmt_double(key.rho) + " method=" + key.method +
                                  " seed=" + std::to_string(seed));
                }
            }
        }

        // Reference flops for the cost-reduction ratio: the full-data method
        // at the same rho if present, else the method's own rho=1.0 row.
        auto reference_flops = [&](const Key& key, std::uint64_t seed) -> double {
            const auto full_it = fleet.find(Key{key.rho, "full"});
            if (full_it != fleet.end()) {
                const auto s = full_it->second.flops_by_seed.find(seed);
                if (s != full_it->second.flops_by_seed.end()) return s->second;
            }
            const auto one_it = fleet.find(Key{1.0, key.method});
            if (one_it != fleet.end()) {
                const auto s = one_it->second.flops_by_seed.find(seed);
                if (s != one_it->second.flops_by_seed.end()) return s->second;
            }
            return 0.0;
        };

        std::printf("%8s %-11s %6s %10s %8s %12s %12s %8s\n", "rho", "method", "seeds",
                    "test_acc", "gap", "latency_s", "energy_J", "ratio");
        for (const auto& [key, acc] : fleet) {
            const double n = static_cast<double>(acc.n);
            double gap = std::nan("");
            if (key.method == "importance") {
                const auto rnd = fleet.find(Key{key.rho, "random"});
                if (rnd != fleet.end() && rnd->second.n == acc.n) {
                    gap = (acc.test_acc - rnd->second.test_acc) / n;
                }
            }
            double ratio_sum = 0.0;
            std::size_t ratio_n = 0;
            for (const auto& [seed, flops] : acc.flops_by_seed) {
                const double ref = reference_flops(key, seed);
                if (ref > 0.0) {
                    ratio_sum += flops / ref;
                    ++ratio_n;
                }
            }
            const double ratio = ratio_n ? ratio_sum / static_cast<double>(ratio_n)
                                         : std::nan("");
            std::printf("%8.3f %-11s %6zu %10.4f ", key.rho, key.method.c_str(), acc.n,
                        acc.test_acc / n);
            if (std::isnan(gap)) {
                std::printf("%8s ", "-");
            } else {
                std::printf("%+8.4f ", gap);
            }
            std::printf("%12.5f %12.5f ", acc.latency / n, acc.energy / n);
            if (std::isnan(ratio)) {
                std::printf("%8s\n", "-");
            } else {
                std::printf("%8.4f\n", ratio);
                // Coarse linearity audit; the acceptance suite carries the
                // exact ceiling-slack bound.
                if (std::fabs(ratio - key.rho) > std::max(0.05, 0.1 * key.rho)) {
                    std::printf("  WARN: cost ratio %.4f deviates from rho %.3f beyond "
                                "ceiling slack\n",
                                ratio, key.rho);
                }
            }
        }
        return kExitOk;
    });
}

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"prunebench: importance-based dataset pruning for edge-learning "
                 "simulations"};
    app.require_subcommand(1);

    std::string config_path, spec_path, out_path, rhos_arg, seed_arg;
    int workers = 0;

    auto* gen = app.add_subcommand("gen-data", "Generate a synthetic dataset file");
    gen->add_option("--config", spec_path, "Dataset spec JSON")->required();
    gen->add_option("--out", out_path, "Output dataset path (.pbds)")->required();

    auto* run = app.add_subcommand("run", "Run the fleet at the configured rho");
    run->add_option("--config", config_path, "Experiment config JSON")->required();
    run->add_option("--out", out_path, "Output directory")->required();
    run->add_option("--workers", workers, "Parallel device workers (override)");
    run->add_option("--seed-override", seed_arg, "Comma-separated seed list override");

    auto* sweep = app.add_subcommand("sweep", "Sweep over pruning ratios");
    sweep->add_option("--config", config_path, "Experiment config JSON")->required();
    sweep->add_option("--out", out_path, "Output directory")->required();
    sweep->add_option("--rhos", rhos_arg, "Comma-separated rho list")->required();
    sweep->add_option("--workers", workers, "Parallel device workers (override)");
    sweep->add_option("--seed-override", seed_arg, "Comma-separated seed list override");

    auto* report = app.add_subcommand("report", "Summarize a sweep.csv directory");
    report->add_option("--out", out_path, "Directory containing sweep.csv")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    auto parse_list = [](const std::string& s, auto convert, const char* what) {
        using V = decltype(convert(std::string{}));
        std::vector<V> out;
        std::size_t pos = 0;
        while (pos <= s.size() && !s.empty()) {
            const auto comma = s.find(',', pos);
            const auto tok = s.substr(pos, comma == std::string::npos ? std::string::npos
                                                                      : comma - pos);
            if (tok.empty()) throw ConfigError(std::string("empty value in ") + what);
            out.push_back(convert(tok));
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
        return out;
    };

    Overrides ov;
    ov.workers = workers;
    try {
        if (!seed_arg.empty()) {
            ov.seeds = parse_list(
                seed_arg,
                [](const std::string& t) {
                    std::size_t idx = 0;
                    const auto v = std::stoull(t, &idx);
                    if (idx != t.size()) throw ConfigError("bad seed '" + t + "'");
                    return static_cast<std::uint64_t>(v);
                },
                "--seed-override");
        }
        if (gen->parsed()) return cmd_gen_data(spec_path, out_path);
        if (run->parsed()) return cmd_run(config_path, out_path, ov);
        if (sweep->parsed()) {
            const auto rhos = parse_list(
                rhos_arg,
                [](const std::string& t) {
                    std::size_t idx = 0;
                    const auto v = std::stod(t, &idx);
                    if (idx != t.size()) throw ConfigError("bad rho '" + t + "'");
                    return v;
                },
                "--rhos");
            return cmd_sweep(config_path, rhos, out_path, ov);
        }
        if (report->parsed()) return cmd_report(out_path);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConfig;
    }
    return kExitConfig;
}

int run_cli(const std::vector<std::string>& args) {
    std::vector<const char*> argv;
    argv.push_back("prunebench");
    for (const auto& a : args) argv.push_back(a.c_str());
    return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace prunebench::cli
