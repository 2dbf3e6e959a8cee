#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "prunebench/common.hpp"
#include "prunebench/fleet.hpp"

using namespace prunebench;

namespace {

ExperimentConfig small_config() {
    ExperimentConfig cfg;
    cfg.dataset_spec = DatasetSpec{600, 4, 6, 3.0, 1.0, 0.1, 42};
    cfg.partition = {3, PartitionScheme::Iid, 0.0, 0};
    cfg.hidden_dim = 8;
    cfg.warmup.epochs = 1;
    cfg.warmup.lr = {ScheduleKind::Constant, 0.05, 0.0, 0};
    cfg.train.epochs = 2;
    cfg.train.batch_size = 16;
    cfg.train.schedule = {ScheduleKind::Cosine, 0.05, 0.0, 0};
    cfg.rho = 0.5;
    cfg.methods = {PruneMethod::Importance, PruneMethod::Random, PruneMethod::Full};
    cfg.profiles = {DeviceProfile{1e9, 2.0, 0}};
    cfg.seeds = {1};
    cfg.test_fraction = 0.2;
    return cfg;
}

bool device_results_equal(const DeviceResult& a, const DeviceResult& b) {
    return a.device_id == b.device_id && a.method == b.method && a.seed == b.seed &&
           a.rho == b.rho && a.train_loss == b.train_loss && a.train_acc == b.train_acc &&
           a.test_loss == b.test_loss && a.test_acc == b.test_acc &&
           a.cost.train_flops == b.cost.train_flops &&
           a.cost.score_flops == b.cost.score_flops &&
           a.cost.select_flops == b.cost.select_flops &&
           a.cost.latency_s == b.cost.latency_s && a.cost.energy_J == b.cost.energy_J &&
           a.cost.storage_bytes == b.cost.storage_bytes;
}

}  // namespace

TEST_CASE("run_fleet: degenerate single-device fleet equals its device") {
    auto cfg = small_config();
    cfg.partition.num_devices = 1;
    cfg.methods = {PruneMethod::Full};
    const auto result = run_fleet(cfg);
    REQUIRE(result.devices.size() == 1);
    REQUIRE(result.fleet.size() == 1);
    CHECK(result.fleet[0].fleet_test_acc == result.devices[0].test_acc);
    CHECK(result.fleet[0].fleet_train_acc == result.devices[0].train_acc);
    CHECK(result.fleet[0].fleet_test_loss == result.devices[0].test_loss);
    CHECK(result.fleet[0].latency_s == result.devices[0].cost.latency_s);
}

TEST_CASE("run_fleet: structure, p_k weighting, and budget audit") {
    const auto cfg = small_config();
    const auto result = run_fleet(cfg);
    // 3 devices x 3 methods x 1 seed.
    REQUIRE(result.devices.size() == 9);
    REQUIRE(result.fleet.size() == 3);

    // Equal shard sizes (600 * 0.8 = 480 over 3): p_k = 1/3 each.
    for (const auto& agg : result.fleet) {
        double acc = 0.0, total = 0.0;
        std::uint64_t flops_sum = 0;
        for (const auto& d : result.devices) {
            if (d.method != agg.method || d.seed != agg.seed) continue;
            CHECK(d.shard_size == 160);
            acc += d.test_acc;
            total += 1.0;
            flops_sum += d.cost.total_flops();
        }
        CHECK(std::fabs(agg.fleet_test_acc - acc / total) <= 1e-12);
        CHECK(agg.total_flops() == flops_sum);
        CHECK(agg.total_flops() == agg.score_flops + agg.select_flops + agg.train_flops);
    }
}

TEST_CASE("run_fleet: unequal shards use data-volume weights") {
    auto cfg = small_config();
    cfg.dataset_spec = DatasetSpec{500, 4, 6, 3.0, 1.0, 0.1, 42};  // 400 train over 3
    cfg.methods = {PruneMethod::Full};
    const auto result = run_fleet(cfg);
    REQUIRE(result.fleet.size() == 1);

    double total = 0.0;
    for (const auto& d : result.devices) total += static_cast<double>(d.shard_size);
    CHECK(total == 400.0);
    double weighted = 0.0, psum = 0.0;
    for (const auto& d : result.devices) {
        const double pk = static_cast<double>(d.shard_size) / total;
        weighted += pk * d.test_acc;
        psum += pk;
    }
    CHECK(std::fabs(psum - 1.0) <= 1e-12);
    CHECK(std::fabs(result.fleet[0].fleet_test_acc - weighted) <= 1e-12);
}

TEST_CASE("run_device: full method and importance at rho = 1") {
    auto cfg = small_config();
    cfg.methods = {PruneMethod::Full, PruneMethod::Importance};
    cfg.rho = 1.0;
    const auto result = run_fleet(cfg);

    for (const auto& d : result.devices) {
        CHECK(d.retained == d.shard_size);  // full keeps all; importance mask is all-true
        CHECK(cost_reduction_ratio(d.cost, d.cost) == 1.0);
        if (d.method == PruneMethod::Importance) {
            CHECK(d.mask.M == d.shard_size);
            CHECK(d.cost.score_flops > 0);
        } else {
            CHECK(d.cost.score_flops == 0);
            CHECK(d.cost.select_flops == 0);
        }
    }
    // Same step counts at rho = 1, so identical modeled training cost.
    const auto& f = result.fleet;
    REQUIRE(f.size() == 2);
    CHECK(f[0].train_flops == f[1].train_flops);
}

TEST_CASE("run_fleet: importance beats random at low rho under 20% flips") {
    // The 20%-flip task in the non-IID fleet protocol. Loss-ranked selection
    // is only expected to win where device shards are skewed; on easy IID
    // single shards with heavy label noise it retains mislabeled samples.
    auto cfg = small_config();
    cfg.dataset_spec = DatasetSpec{8000, 10, 20, 3.0, 1.0, 0.2, 7};
    cfg.partition = {15, PartitionScheme::Dirichlet, 0.5, 0};
    cfg.hidden_dim = 32;
    cfg.warmup.lr = {ScheduleKind::Constant, 0.15, 0.0, 0};
    cfg.train.epochs = 30;
    cfg.train.batch_size = 32;
    cfg.train.schedule = {ScheduleKind::Cosine, 0.15, 0.0, 0};
    cfg.rho = 0.1;
    cfg.seeds = {1, 2, 3, 4, 5};
    cfg.workers = 4;

    ExperimentConfig imp = cfg;
    imp.methods = {PruneMethod::Importance};
    ExperimentConfig rnd = cfg;
    rnd.methods = {PruneMethod::Random};
    const double gap = accuracy_gap(run_fleet(imp), run_fleet(rnd));
    CHECK(gap > 0.0);
}

TEST_CASE("run_fleet: workers do not change results") {
    auto cfg = small_config();
    cfg.seeds = {1, 2};
    const auto serial = run_fleet(cfg);
    cfg.workers = 4;
    const auto parallel = run_fleet(cfg);

    REQUIRE(serial.devices.size() == parallel.devices.size());
    for (std::size_t i = 0; i < serial.devices.size(); ++i) {
        CHECK(device_results_equal(serial.devices[i], parallel.devices[i]));
    }
    REQUIRE(serial.fleet.size() == parallel.fleet.size());
    for (std::size_t i = 0; i < serial.fleet.size(); ++i) {
        CHECK(serial.fleet[i].fleet_test_acc == parallel.fleet[i].fleet_test_acc);
        CHECK(serial.fleet[i].aggregate_cost == parallel.fleet[i].aggregate_cost);
    }
}

TEST_CASE("run_fleet: device errors carry attribution") {
    auto cfg = small_config();
    cfg.train.batch_size = 16;
    cfg.warmup.batch_size = 4096;  // larger than any shard
    cfg.methods = {PruneMethod::Importance};
    CHECK_THROWS_WITH_AS(run_fleet(cfg), doctest::Contains("device"), PipelineError);
}

TEST_CASE("accuracy_gap: arithmetic and config matching") {
    FleetResult imp, rnd;
    FleetAggregate a;
    a.method = PruneMethod::Importance;
    a.seed = 1;
    a.rho = 0.5;
    a.fleet_test_acc = 0.80;
    imp.fleet.push_back(a);
    FleetAggregate b = a;
    b.method = PruneMethod::Random;
    b.fleet_test_acc = 0.65;
    rnd.fleet.push_back(b);

    CHECK(accuracy_gap(imp, rnd) == doctest::Approx(0.15).epsilon(1e-15));

    FleetResult same = imp;
    FleetResult rnd_same = rnd;
    rnd_same.fleet[0].fleet_test_acc = 0.80;
    CHECK(accuracy_gap(same, rnd_same) == 0.0);

    FleetResult mismatched = rnd;
    mismatched.fleet[0].seed = 2;
    CHECK_THROWS_AS(accuracy_gap(imp, mismatched), PipelineError);
    CHECK_THROWS_AS(accuracy_gap(rnd, rnd), PipelineError);  // wrong methods
}

TEST_CASE("sweep_rho: cardinality, ordering, and latency linearity") {
    auto cfg = small_config();
    cfg.seeds = {1, 2};
    cfg.methods = {PruneMethod::Importance, PruneMethod::Random};
    const auto result =
        sweep_rho(cfg, {1.0, 0.1, 0.5}, cfg.methods, RunOutputs{});

    // 3 rhos x 2 methods x 2 seeds.
    REQUIRE(result.fleet.size() == 12);
    CHECK(std::is_sorted(result.fleet.begin(), result.fleet.end(),
                         [](const auto& x, const auto& y) { return x.rho < y.rho; }));

    double lat_half = 0.0, lat_full = 0.0;
    for (const auto& agg : result.fleet) {
        if (agg.method != PruneMethod::Random) continue;
        if (agg.rho == 0.5) lat_half += agg.latency_s;
        if (agg.rho == 1.0) lat_full += agg.latency_s;
    }
    // Ceiling slack: 160-sample shards at b=16 give exactly half the steps.
    CHECK(lat_half == doctest::Approx(0.5 * lat_full).epsilon(1e-12));

    const auto gaps = accuracy_gap_rows(result);
    REQUIRE(gaps.size() == 6);  // per (rho, seed)
    CHECK(gaps[0].rho == 0.1);
}

TEST_CASE("run_fleet: trace and score files on request") {
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "prunebench_fleet_out";
    fs::remove_all(dir);

    auto cfg = small_config();
    cfg.methods = {PruneMethod::Importance};
    const auto result = run_fleet(cfg, RunOutputs{dir, true, true});
    for (const auto& d : result.devices) {
        CHECK(fs::exists(dir / d.trace_path));
    }
    CHECK(fs::exists(dir / "scores_0_1.csv"));
    fs::remove_all(dir);
}
