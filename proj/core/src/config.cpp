#include "prunebench/config.hpp"

#include <json.hpp>

#include <cmath>
#include <ctime>
#include <fstream>
#include <set>

#include "prunebench/common.hpp"

namespace prunebench {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw ConfigError("config error at " + path + ": " + what);
}

void expect_object(const json& j, const std::string& path) {
    if (!j.is_object()) fail(path, "expected an object");
}

/// Rejects keys outside the allowed set.
void check_keys(const json& j, const std::string& path,
                const std::set<std::string>& allowed) {
    for (const auto& [key, _] : j.items()) {
        if (!allowed.count(key)) fail(path + "/" + key, "unknown key");
    }
}

double get_number(const json& j, const std::string& path) {
    if (!j.is_number()) fail(path, "expected a number");
    return j.get<double>();
}

std::int64_t get_integer(const json& j, const std::string& path) {
    if (!j.is_number_integer()) fail(path, "expected an integer");
    return j.get<std::int64_t>();
}

std::uint64_t get_u64(const json& j, const std::string& path) {
    if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<std::int64_t>() >= 0)) {
        fail(path, "expected a non-negative integer");
    }
    return j.get<std::uint64_t>();
}

std::string get_string(const json& j, const std::string& path) {
    if (!j.is_string()) fail(path, "expected a string");
    return j.get<std::string>();
}

Schedule parse_schedule(const json& j, const std::string& path, const Schedule& dflt) {
    expect_object(j, path);
    check_keys(j, path, {"kind", "eta0", "eta_min", "horizon"});
    Schedule s = dflt;
    if (j.contains("kind")) {
        const auto kind = get_string(j["kind"], path + "/kind");
        if (kind == "constant") {
            s.kind = ScheduleKind::Constant;
        } else if (kind == "cosine") {
            s.kind = ScheduleKind::Cosine;
        } else {
            fail(path + "/kind", "expected \"constant\" or \"cosine\"");
        }
    }
    if (j.contains("eta0")) s.eta0 = get_number(j["eta0"], path + "/eta0");
    if (j.contains("eta_min")) s.eta_min = get_number(j["eta_min"], path + "/eta_min");
    if (j.contains("horizon")) s.horizon = get_integer(j["horizon"], path + "/horizon");
    if (s.eta0 < 0.0) fail(path + "/eta0", "must be >= 0");
    if (s.eta_min < 0.0 || s.eta_min > s.eta0) {
        fail(path + "/eta_min", "must satisfy 0 <= eta_min <= eta0");
    }
    if (s.horizon < 0) fail(path + "/horizon", "must be >= 0 (0 = planned steps)");
    return s;
}

void parse_dataset(const json& j, ExperimentConfig& cfg) {
    const std::string path = "/dataset";
    expect_object(j, path);
    if (j.contains("path")) {
        check_keys(j, path, {"path", "per_sample_bytes"});
        cfg.dataset_path = get_string(j["path"], path + "/path");
        if (cfg.dataset_path.empty()) fail(path + "/path", "must be non-empty");
    } else {
        check_keys(j, path,
                   {"num_samples", "num_classes", "feature_dim", "class_separation",
                    "noise_std", "label_noise", "seed", "per_sample_bytes"});
        DatasetSpec spec;
        if (!j.contains("num_samples")) fail(path + "/num_samples", "missing required key");
        const auto n = get_integer(j["num_samples"], path + "/num_samples");
        if (n < 1) fail(path + "/num_samples", "must be >= 1");
        spec.num_samples = static_cast<std::size_t>(n);
        if (!j.contains("num_classes")) fail(path + "/num_classes", "missing required key");
        const auto c = get_integer(j["num_classes"], path + "/num_classes");
        if (c < 2) fail(path + "/num_classes", "must be >= 2");
        spec.num_classes = static_cast<int>(c);
        if (!j.contains("feature_dim")) fail(path + "/feature_dim", "missing required key");
        const auto d = get_integer(j["feature_dim"], path + "/feature_dim");
        if (d < 1) fail(path + "/feature_dim", "must be >= 1");
        spec.feature_dim = static_cast<std::size_t>(d);
        spec.class_separation =
            j.contains("class_separation")
                ? get_number(j["class_separation"], path + "/class_separation")
                : 1.0;
        if (!(spec.class_separation > 0.0)) fail(path + "/class_separation", "must be > 0");
        spec.noise_std =
            j.contains("noise_std") ? get_number(j["noise_std"], path + "/noise_std") : 1.0;
        if (!(spec.noise_std > 0.0)) fail(path + "/noise_std", "must be > 0");
        spec.label_noise =
            j.contains("label_noise") ? get_number(j["label_noise"], path + "/label_noise")
                                      : 0.0;
        if (spec.label_noise < 0.0 || spec.label_noise >= 1.0) {
            fail(path + "/label_noise", "must be in [0, 1)");
        }
        spec.seed = j.contains("seed") ? get_u64(j["seed"], path + "/seed") : 42;
        try {
            spec.validate();
        } catch (const ConfigError& e) {
            fail(path, e.what());
        }
        cfg.dataset_spec = spec;
    }
    if (j.contains("per_sample_bytes")) {
        const auto psb = get_integer(j["per_sample_bytes"], path + "/per_sample_bytes");
        if (psb < 1) fail(path + "/per_sample_bytes", "must be >= 1");
        cfg.per_sample_bytes = static_cast<std::uint32_t>(psb);
    }
}

void parse_partition(const json& j, ExperimentConfig& cfg) {
    const std::string path = "/partition";
    expect_object(j, path);
    check_keys(j, path, {"num_devices", "scheme", "beta", "seed"});
    if (j.contains("num_devices")) {
        const auto k = get_integer(j["num_devices"], path + "/num_devices");
        if (k < 1) fail(path + "/num_devices", "must be >= 1");
        cfg.partition.num_devices = static_cast<int>(k);
    }
    std::string scheme = "iid";
    if (j.contains("scheme")) scheme = get_string(j["scheme"], path + "/scheme");
    if (scheme == "iid") {
        cfg.partition.scheme = PartitionScheme::Iid;
        if (j.contains("beta")) fail(path + "/beta", "only valid for scheme \"dirichlet\"");
    } else if (scheme == "dirichlet") {
        cfg.partition.scheme = PartitionScheme::Dirichlet;
        if (!j.contains("beta")) fail(path + "/beta", "missing required key for dirichlet");
        cfg.partition.beta = get_number(j["beta"], path + "/beta");
        if (!(cfg.partition.beta > 0.0)) fail(path + "/beta", "must be > 0");
    } else {
        fail(path + "/scheme", "expected \"iid\" or \"dirichlet\"");
    }
    if (j.contains("seed")) cfg.partition.seed = get_u64(j["seed"], path + "/seed");
}

void parse_warmup(const json& j, ExperimentConfig& cfg) {
    const std::string path = "/warmup";
    expect_object(j, path);
    check_keys(j, path, {"epochs", "iterations", "batch_size", "lr"});
    if (j.contains("epochs")) {
        const auto e = get_integer(j["epochs"], path + "/epochs");
        if (e < 1) fail(path + "/epochs", "must be >= 1");
        cfg.warmup.epochs = static_cast<int>(e);
    }
    if (j.contains("iterations")) {
        const auto it = get_integer(j["iterations"], path + "/iterations");
        if (it < 0) fail(path + "/iterations", "must be >= 0 (0 = use epochs)");
        cfg.warmup.iterations = it;
    }
    if (j.contains("batch_size")) {
        const auto b = get_integer(j["batch_size"], path + "/batch_size");
        if (b < 0) fail(path + "/batch_size", "must be >= 0 (0 = training batch size)");
        cfg.warmup.batch_size = static_cast<int>(b);
    }
    if (j.contains("lr")) cfg.warmup.lr = parse_schedule(j["lr"], path + "/lr", cfg.warmup.lr);
}

void parse_train(const json& j, ExperimentConfig& cfg) {
    const std::string path = "/train";
    expect_object(j, path);
    check_keys(j, path, {"epochs", "batch_size", "schedule", "optimizer", "eval_every"});
    if (j.contains("epochs")) {
        const auto e = get_integer(j["epochs"], path + "/epochs");
        if (e < 1) fail(path + "/epochs", "must be >= 1");
        cfg.train.epochs = static_cast<int>(e);
    }
    if (j.contains("batch_size")) {
        const auto b = get_integer(j["batch_size"], path + "/batch_size");
        if (b < 1) fail(path + "/batch_size", "must be >= 1");
        cfg.train.batch_size = static_cast<int>(b);
    }
    if (j.contains("schedule")) {
        cfg.train.schedule = parse_schedule(j["schedule"], path + "/schedule",
                                            cfg.train.schedule);
    }
    if (j.contains("optimizer")) {
        const std::string opath = path + "/optimizer";
        const auto& jo = j["optimizer"];
        expect_object(jo, opath);
        check_keys(jo, opath, {"kind", "beta1", "beta2", "eps"});
        const auto kind =
            jo.contains("kind") ? get_string(jo["kind"], opath + "/kind") : "sgd";
        if (kind == "sgd") {
            cfg.train.optimizer = OptimizerKind::Sgd;
            for (const char* k : {"beta1", "beta2", "eps"}) {
                if (jo.contains(k)) fail(opath + "/" + k, "only valid for \"adam\"");
            }
        } else if (kind == "adam") {
            cfg.train.optimizer = OptimizerKind::Adam;
            if (jo.contains("beta1")) {
                cfg.train.adam.beta1 = get_number(jo["beta1"], opath + "/beta1");
            }
            if (jo.contains("beta2")) {
                cfg.train.adam.beta2 = get_number(jo["beta2"], opath + "/beta2");
            }
            if (jo.contains("eps")) cfg.train.adam.eps = get_number(jo["eps"], opath + "/eps");
            if (cfg.train.adam.beta1 < 0.0 || cfg.train.adam.beta1 >= 1.0) {
                fail(opath + "/beta1", "must be in [0, 1)");
            }
            if (cfg.train.adam.beta2 < 0.0 || cfg.train.adam.beta2 >= 1.0) {
                fail(opath + "/beta2", "must be in [0, 1)");
            }
            if (!(cfg.train.adam.eps > 0.0)) fail(opath + "/eps", "must be > 0");
        } else {
            fail(opath + "/kind", "expected \"sgd\" or \"adam\"");
        }
    }
    if (j.contains("eval_every")) {
        const auto ev = get_integer(j["eval_every"], path + "/eval_every");
        if (ev < 0) fail(path + "/eval_every", "must be >= 0");
        cfg.train.eval_every = ev;
    }
}

DeviceProfile parse_profile(const json& j, const std::string& path) {
    expect_object(j, path);
    check_keys(j, path, {"throughput_flops", "power_watts", "per_sample_bytes"});
    DeviceProfile p;
    if (j.contains("throughput_flops")) {
        p.throughput_flops = get_number(j["throughput_flops"], path + "/throughput_flops");
    }
    if (j.contains("power_watts")) {
        p.power_watts = get_number(j["power_watts"], path + "/power_watts");
    }
    if (j.contains("per_sample_bytes")) {
        const auto psb = get_integer(j["per_sample_bytes"], path + "/per_sample_bytes");
        if (psb < 0) fail(path + "/per_sample_bytes", "must be >= 0 (0 = dataset default)");
        p.per_sample_bytes = static_cast<std::uint32_t>(psb);
    }
    if (!(p.throughput_flops > 0.0)) fail(path + "/throughput_flops", "must be > 0");
    if (!(p.power_watts > 0.0)) fail(path + "/power_watts", "must be > 0");
    return p;
}

ExperimentConfig parse_root(const json& j) {
    expect_object(j, "/");
    check_keys(j, "",
               {"dataset", "partition", "model", "warmup", "train", "pruning", "methods",
                "profile", "weights", "seeds", "test_fraction", "workers"});
    ExperimentConfig cfg;
    cfg.train.epochs = 30;
    cfg.train.batch_size = 32;
    cfg.train.schedule = Schedule{ScheduleKind::Cosine, 0.15, 0.0, 0};
    cfg.profiles = {DeviceProfile{1e9, 2.0, 0}};

    if (!j.contains("dataset")) fail("/dataset", "missing required key");
    parse_dataset(j["dataset"], cfg);
    if (j.contains("partition")) parse_partition(j["partition"], cfg);
    if (j.contains("model")) {
        expect_object(j["model"], "/model");
        check_keys(j["model"], "/model", {"hidden_dim"});
        if (j["model"].contains("hidden_dim")) {
            const auto h = get_integer(j["model"]["hidden_dim"], "/model/hidden_dim");
            if (h < 0) fail("/model/hidden_dim", "must be >= 0");
            cfg.hidden_dim = static_cast<int>(h);
        }
    }
    if (j.contains("warmup")) parse_warmup(j["warmup"], cfg);
    if (j.contains("train")) parse_train(j["train"], cfg);
    if (j.contains("pruning")) {
        expect_object(j["pruning"], "/pruning");
        check_keys(j["pruning"], "/pruning", {"rho"});
        if (j["pruning"].contains("rho")) {
            cfg.rho = get_number(j["pruning"]["rho"], "/pruning/rho");
            if (!(cfg.rho > 0.0) || cfg.rho > 1.0) fail("/pruning/rho", "must be in (0, 1]");
        }
    }
    if (j.contains("methods")) {
        const auto& jm = j["methods"];
        if (!jm.is_array() || jm.empty()) fail("/methods", "expected a non-empty array");
        cfg.methods.clear();
        for (std::size_t i = 0; i < jm.size(); ++i) {
            const auto name = get_string(jm[i], "/methods/" + std::to_string(i));
            try {
                cfg.methods.push_back(method_from_name(name));
            } catch (const ConfigError& e) {
                fail("/methods/" + std::to_string(i), e.what());
            }
        }
    }
    if (j.contains("profile")) {
        const auto& jp = j["profile"];
        cfg.profiles.clear();
        if (jp.is_array()) {
            if (jp.empty()) fail("/profile", "expected an object or non-empty array");
            for (std::size_t i = 0; i < jp.size(); ++i) {
                cfg.profiles.push_back(
                    parse_profile(jp[i], "/profile/" + std::to_string(i)));
            }
        } else {
            cfg.profiles.push_back(parse_profile(jp, "/profile"));
        }
    }
    if (j.contains("weights")) {
        const auto& jw = j["weights"];
        expect_object(jw, "/weights");
        check_keys(jw, "/weights", {"lambda_tau", "lambda_energy", "lambda_storage"});
        if (jw.contains("lambda_tau")) {
            cfg.weights.lambda_tau = get_number(jw["lambda_tau"], "/weights/lambda_tau");
        }
        if (jw.contains("lambda_energy")) {
            cfg.weights.lambda_energy =
                get_number(jw["lambda_energy"], "/weights/lambda_energy");
        }
        if (jw.contains("lambda_storage")) {
            cfg.weights.lambda_storage =
                get_number(jw["lambda_storage"], "/weights/lambda_storage");
        }
        if (cfg.weights.lambda_tau < 0.0 || cfg.weights.lambda_energy < 0.0 ||
            cfg.weights.lambda_storage < 0.0) {
            fail("/weights", "lambdas must be >= 0");
        }
    }
    if (j.contains("seeds")) {
        const auto& js = j["seeds"];
        if (!js.is_array() || js.empty()) fail("/seeds", "expected a non-empty array");
        cfg.seeds.clear();
        for (std::size_t i = 0; i < js.size(); ++i) {
            cfg.seeds.push_back(get_u64(js[i], "/seeds/" + std::to_string(i)));
        }
    }
    if (j.contains("test_fraction")) {
        cfg.test_fraction = get_number(j["test_fraction"], "/test_fraction");
        if (!(cfg.test_fraction > 0.0) || !(cfg.test_fraction < 1.0)) {
            fail("/test_fraction", "must be in (0, 1)");
        }
    }
    if (j.contains("workers")) {
        const auto w = get_integer(j["workers"], "/workers");
        if (w < 1) fail("/workers", "must be >= 1");
        cfg.workers = static_cast<int>(w);
    }

    try {
        cfg.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(std::string("config error: ") + e.what());
    }
    return cfg;
}

json parse_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError("config error: " + path.string() + ": " + e.what());
    }
    return j;
}

const char* schedule_kind_name(ScheduleKind k) {
    return k == ScheduleKind::Constant ? "constant" : "cosine";
}

json schedule_json(const Schedule& s) {
    return json{{"kind", schedule_kind_name(s.kind)},
                {"eta0", s.eta0},
                {"eta_min", s.eta_min},
                {"horizon", s.horizon}};
}

}  // namespace

ExperimentConfig parse_config(const std::filesystem::path& path) {
    return parse_root(parse_json_file(path));
}

ExperimentConfig parse_config_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config error: ") + e.what());
    }
    return parse_root(j);
}

DatasetSpec parse_dataset_spec(const std::filesystem::path& path) {
    const json j = parse_json_file(path);
    expect_object(j, "/");
    if (j.contains("path")) {
        throw ConfigError("config error at /path: gen-data requires an inline "
                          "dataset spec, not a file reference");
    }
    ExperimentConfig tmp;
    parse_dataset(j, tmp);
    return *tmp.dataset_spec;
}

std::string resolved_config_json(const ExperimentConfig& cfg) {
    json j;
    if (cfg.dataset_spec) {
        const auto& s = *cfg.dataset_spec;
        j["dataset"] = {{"num_samples", s.num_samples},
                        {"num_classes", s.num_classes},
                        {"feature_dim", s.feature_dim},
                        {"class_separation", s.class_separation},
                        {"noise_std", s.noise_std},
                        {"label_noise", s.label_noise},
                        {"seed", s.seed}};
    } else {
        j["dataset"] = {{"path", cfg.dataset_path.string()}};
    }
    if (cfg.per_sample_bytes > 0) j["dataset"]["per_sample_bytes"] = cfg.per_sample_bytes;

    j["partition"] = {{"num_devices", cfg.partition.num_devices},
                      {"scheme", cfg.partition.scheme == PartitionScheme::Iid
                                     ? "iid"
                                     : "dirichlet"},
                      {"seed", cfg.partition.seed}};
    if (cfg.partition.scheme == PartitionScheme::Dirichlet) {
        j["partition"]["beta"] = cfg.partition.beta;
    }
    j["model"] = {{"hidden_dim", cfg.hidden_dim}};
    j["warmup"] = {{"epochs", cfg.warmup.epochs},
                   {"iterations", cfg.warmup.iterations},
                   {"batch_size", cfg.warmup.batch_size},
                   {"lr", schedule_json(cfg.warmup.lr)}};
    j["train"] = {{"epochs", cfg.train.epochs},
                  {"batch_size", cfg.train.batch_size},
                  {"schedule", schedule_json(cfg.train.schedule)},
                  {"eval_every", cfg.train.eval_every}};
    if (cfg.train.optimizer == OptimizerKind::Sgd) {
        j["train"]["optimizer"] = {{"kind", "sgd"}};
    } else {
        j["train"]["optimizer"] = {{"kind", "adam"},
                                   {"beta1", cfg.train.adam.beta1},
                                   {"beta2", cfg.train.adam.beta2},
                                   {"eps", cfg.train.adam.eps}};
    }
    j["pruning"] = {{"rho", cfg.rho}};
    j["methods"] = json::array();
    for (const auto m : cfg.methods) j["methods"].push_back(method_name(m));
    j["profile"] = json::array();
    for (const auto& p : cfg.profiles) {
        j["profile"].push_back({{"throughput_flops", p.throughput_flops},
                                {"power_watts", p.power_watts},
                                {"per_sample_bytes", p.per_sample_bytes}});
    }
    j["weights"] = {{"lambda_tau", cfg.weights.lambda_tau},
                    {"lambda_energy", cfg.weights.lambda_energy},
                    {"lambda_storage", cfg.weights.lambda_storage}};
    j["seeds"] = cfg.seeds;
    j["test_fraction"] = cfg.test_fraction;
    j["workers"] = cfg.workers;
    return j.dump();  // nlohmann objects keep sorted keys, so this is canonical
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const char ch : bytes) {
        h ^= static_cast<unsigned char>(ch);
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string config_hash(const ExperimentConfig& cfg) {
    const auto h = fnv1a64(resolved_config_json(cfg));
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

RunManifest make_manifest(const ExperimentConfig& cfg, const std::string& command,
                          std::vector<std::string> outputs) {
    RunManifest m;
    m.artifact_version = kVersion;
    m.config_hash = config_hash(cfg);
    m.command = command;
    m.resolved_config = resolved_config_json(cfg);
    m.outputs = std::move(outputs);

    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    m.created_utc = buf;
    return m;
}

void write_manifest(const RunManifest& manifest, const std::filesystem::path& path) {
    json j;
    j["artifact_version"] = manifest.artifact_version;
    j["config_hash"] = manifest.config_hash;
    j["command"] = manifest.command;
    j["created_utc"] = manifest.created_utc;
    j["resolved_config"] = json::parse(manifest.resolved_config);
    j["outputs"] = manifest.outputs;
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << j.dump(2) << "\n";
    if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace prunebench
