#include "prunebench/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "prunebench/common.hpp"
#include "prunebench/rng.hpp"

namespace prunebench {

namespace {

// Regular simplex vertex i in R^(C-1): column i of the Helmert matrix,
// pairwise distance sqrt(2) before scaling.
double helmert(std::size_t row, std::size_t col) {
    const double j = static_cast<double>(row + 1);
    const double norm = 1.0 / std::sqrt(j * (j + 1.0));
    if (col < row + 1) return norm;
    if (col == row + 1) return -j * norm;
    return 0.0;
}

std::vector<double> class_means(int num_classes, std::size_t feature_dim,
                                double separation) {
    const auto c = static_cast<std::size_t>(num_classes);
    std::vector<double> means(c * feature_dim, 0.0);
    const double scale = separation / std::sqrt(2.0);
    for (std::size_t i = 0; i < c; ++i) {
        for (std::size_t j = 0; j + 1 < c; ++j) {
            means[i * feature_dim + j] = scale * helmert(j, i);
        }
    }
    return means;
}

void assign_rows(const Dataset& src, std::span<const std::uint32_t> rows,
                 std::vector<double>& features, std::vector<int>& labels) {
    const std::size_t d = src.feature_dim;
    features.resize(rows.size() * d);
    labels.resize(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::memcpy(features.data() + i * d, src.features.data() + rows[i] * d,
                    d * sizeof(double));
        labels[i] = src.labels[rows[i]];
    }
}

// --- little-endian primitives -------------------------------------------

void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

std::uint16_t get_u16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t get_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) |
           (static_cast<std::uint32_t>(p[3]) << 24);
}

double get_f64(const unsigned char* p) {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

constexpr std::size_t kHeaderBytes = 4 + 2 + 4 + 4 + 2 + 4;

Dataset load_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw IoError(path.string() + ": empty CSV file");

    std::vector<std::string> cols;
    std::stringstream hs(line);
    for (std::string tok; std::getline(hs, tok, ',');) cols.push_back(tok);
    if (cols.size() < 2 || cols.back() != "label") {
        throw IoError(path.string() + ": CSV header must be f0,...,f{d-1},label");
    }
    const std::size_t d = cols.size() - 1;
    for (std::size_t j = 0; j < d; ++j) {
        if (cols[j] != "f" + std::to_string(j)) {
            throw IoError(path.string() + ": unexpected CSV column '" + cols[j] +
                          "', expected f" + std::to_string(j));
        }
    }

    Dataset data;
    data.feature_dim = d;
    int max_label = -1;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        std::stringstream rs(line);
        std::string tok;
        for (std::size_t j = 0; j < d; ++j) {
            if (!std::getline(rs, tok, ',')) {
                throw IoError(path.string() + ": row " + std::to_string(row) +
                              " has fewer than " + std::to_string(d + 1) + " fields");
            }
            try {
                data.features.push_back(std::stod(tok));
            } catch (const std::exception&) {
                throw IoError(path.string() + ": row " + std::to_string(row) +
                              ": bad number '" + tok + "'");
            }
        }
        if (!std::getline(rs, tok, ',')) {
            throw IoError(path.string() + ": row " + std::to_string(row) + " missing label");
        }
        int label = 0;
        try {
            label = std::stoi(tok);
        } catch (const std::exception&) {
            throw IoError(path.string() + ": row " + std::to_string(row) +
                          ": bad label '" + tok + "'");
        }
        if (label < 0) {
            throw IoError(path.string() + ": row " + std::to_string(row) +
                          ": negative label");
        }
        data.labels.push_back(label);
        max_label = std::max(max_label, label);
    }
    if (data.labels.empty()) throw IoError(path.string() + ": CSV has no data rows");
    data.num_classes = std::max(max_label + 1, 2);
    data.per_sample_bytes = default_per_sample_bytes(d);
    return data;
}

}  // namespace

void DatasetSpec::validate() const {
    if (num_samples < 1) throw ConfigError("dataset num_samples must be >= 1");
    if (num_classes < 2) throw ConfigError("dataset num_classes must be >= 2");
    if (feature_dim < 1) throw ConfigError("dataset feature_dim must be >= 1");
    if (!(class_separation > 0.0)) throw ConfigError("dataset class_separation must be > 0");
    if (!(noise_std > 0.0)) throw ConfigError("dataset noise_std must be > 0");
    if (label_noise < 0.0 || label_noise >= 1.0) {
        throw ConfigError("dataset label_noise must be in [0, 1)");
    }
    if (feature_dim + 1 < static_cast<std::size_t>(num_classes)) {
        throw ConfigError("dataset feature_dim must be >= num_classes - 1 "
                          "(simplex mean placement)");
    }
}

void PartitionSpec::validate() const {
    if (num_devices < 1) throw ConfigError("partition num_devices must be >= 1");
    if (scheme == PartitionScheme::Dirichlet && !(beta > 0.0)) {
        throw ConfigError("partition beta must be > 0 for dirichlet");
    }
}

Dataset generate_synthetic(const DatasetSpec& spec) {
    spec.validate();
    const std::size_t n = spec.num_samples;
    const std::size_t d = spec.feature_dim;
    const auto c = static_cast<std::uint64_t>(spec.num_classes);

    Dataset data;
    data.feature_dim = d;
    data.num_classes = spec.num_classes;
    data.per_sample_bytes = default_per_sample_bytes(d);
    data.features.resize(n * d);
    data.labels.resize(n);

    const auto means = class_means(spec.num_classes, d, spec.class_separation);

    // Label-noise draws live on their own stream so a noiseless twin with the
    // same seed produces identical features and pre-noise labels.
    Rng gen = make_rng(derive_seed(spec.seed, Stream::DataGen));
    for (std::size_t i = 0; i < n; ++i) {
        const auto y = static_cast<int>(uniform_index(gen, c));
        data.labels[i] = y;
        const double* mu = means.data() + static_cast<std::size_t>(y) * d;
        double* x = data.features.data() + i * d;
        for (std::size_t j = 0; j < d; ++j) {
            x[j] = mu[j] + spec.noise_std * gaussian(gen);
        }
    }
    if (spec.label_noise > 0.0) {
        Rng noise = make_rng(derive_seed(spec.seed, Stream::LabelNoise));
        for (std::size_t i = 0; i < n; ++i) {
            if (uniform01(noise) < spec.label_noise) {
                data.labels[i] = static_cast<int>(uniform_index(noise, c));
            }
        }
    }
    return data;
}

std::vector<DeviceDataset> partition(const Dataset& data, const PartitionSpec& spec) {
    spec.validate();
    const std::size_t n = data.size();
    const auto k = static_cast<std::size_t>(spec.num_devices);
    if (k > n) {
        throw PipelineError("infeasible partition: " + std::to_string(k) +
                            " devices but only " + std::to_string(n) + " samples");
    }

    Rng rng = make_rng(derive_seed(spec.seed, Stream::Partition));
    std::vector<std::vector<std::uint32_t>> assignment(k);

    if (spec.scheme == PartitionScheme::Iid) {
        auto order = shuffled_indices(n, rng);
        const std::size_t base = n / k;
        const std::size_t extra = n % k;
        std::size_t pos = 0;
        for (std::size_t dev = 0; dev < k; ++dev) {
            const std::size_t take = base + (dev < extra ? 1 : 0);
            assignment[dev].assign(order.begin() + pos, order.begin() + pos + take);
            pos += take;
        }
    } else {
        // Per class: draw device proportions from Dirichlet(beta), deal the
        // class's (shuffled) samples by cumulative rounding.
        std::vector<std::vector<std::uint32_t>> by_class(
            static_cast<std::size_t>(data.num_classes));
        for (std::size_t i = 0; i < n; ++i) {
            by_class[static_cast<std::size_t>(data.labels[i])].push_back(
                static_cast<std::uint32_t>(i));
        }
        constexpr int kMaxRetries = 100;
        bool ok = false;
        for (int attempt = 0; attempt < kMaxRetries && !ok; ++attempt) {
            for (auto& a : assignment) a.clear();
            for (auto& cls : by_class) {
                if (cls.empty()) continue;
                shuffle(cls, rng);
                const auto props = dirichlet_sample(rng, spec.beta, k);
                std::size_t start = 0;
                double cum = 0.0;
                for (std::size_t dev = 0; dev < k; ++dev) {
                    cum += props[dev];
                    const auto end =
                        dev + 1 == k
                            ? cls.size()
                            : std::min(cls.size(),
                                       static_cast<std::size_t>(
                                           std::llround(cum * static_cast<double>(cls.size()))));
                    for (std::size_t i = start; i < end; ++i) {
                        assignment[dev].push_back(cls[i]);
                    }
                    start = std::max(start, end);
                }
            }
            ok = std::none_of(assignment.begin(), assignment.end(),
                              [](const auto& a) { return a.empty(); });
        }
        if (!ok) {
            throw PipelineError(
                "dirichlet partition left a device empty after 100 retries "
                "(beta=" + std::to_string(spec.beta) + ", K=" + std::to_string(k) + ")");
        }
    }

    std::vector<DeviceDataset> shards(k);
    for (std::size_t dev = 0; dev < k; ++dev) {
        auto& shard = shards[dev];
        shard.device_id = static_cast<int>(dev);
        shard.feature_dim = data.feature_dim;
        shard.num_classes = data.num_classes;
        shard.per_sample_bytes = data.per_sample_bytes;
        assign_rows(data, assignment[dev], shard.features, shard.labels);
    }
    return shards;
}

std::uint64_t storage_bytes(const Dataset& data, std::uint64_t count) {
    if (count > data.size()) throw PipelineError("storage count exceeds dataset size");
    return count * data.per_sample_bytes;
}

std::uint64_t storage_bytes(const DeviceDataset& shard, std::uint64_t count) {
    if (count > shard.size()) throw PipelineError("storage count exceeds shard size");
    return count * shard.per_sample_bytes;
}

DeviceDataset as_device(const Dataset& data, int device_id) {
    return DeviceDataset{device_id, data.feature_dim, data.num_classes,
                         data.features, data.labels, data.per_sample_bytes};
}

Dataset subset(const Dataset& data, std::span<const std::uint32_t> rows) {
    Dataset out;
    out.feature_dim = data.feature_dim;
    out.num_classes = data.num_classes;
    out.per_sample_bytes = data.per_sample_bytes;
    assign_rows(data, rows, out.features, out.labels);
    return out;
}

void save_dataset(const Dataset& data, const std::filesystem::path& path) {
    std::string buf;
    buf.reserve(kHeaderBytes + data.size() * (data.feature_dim * 8 + 2));
    buf.append("PBDS");
    put_u16(buf, 1);
    put_u32(buf, static_cast<std::uint32_t>(data.size()));
    put_u32(buf, static_cast<std::uint32_t>(data.feature_dim));
    put_u16(buf, static_cast<std::uint16_t>(data.num_classes));
    put_u32(buf, data.per_sample_bytes);
    for (std::size_t i = 0; i < data.size(); ++i) {
        for (std::size_t j = 0; j < data.feature_dim; ++j) {
            put_f64(buf, data.features[i * data.feature_dim + j]);
        }
        put_u16(buf, static_cast<std::uint16_t>(data.labels[i]));
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw IoError("write failed for " + path.string());
}

Dataset load_dataset(const std::filesystem::path& path) {
    if (path.extension() == ".csv") return load_csv(path);

    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const auto* p = reinterpret_cast<const unsigned char*>(buf.data());

    if (buf.size() < kHeaderBytes) {
        throw IoError(path.string() + ": truncated header, expected " +
                      std::to_string(kHeaderBytes) + " bytes, got " +
                      std::to_string(buf.size()) + " (offset 0)");
    }
    if (std::memcmp(p, "PBDS", 4) != 0) {
        throw IoError(path.string() + ": bad magic at offset 0, expected \"PBDS\"");
    }
    const std::uint16_t version = get_u16(p + 4);
    if (version != 1) {
        throw IoError(path.string() + ": unsupported version " +
                      std::to_string(version) + " at offset 4");
    }
    const std::uint32_t n = get_u32(p + 6);
    const std::uint32_t d = get_u32(p + 10);
    const std::uint16_t c = get_u16(p + 14);
    const std::uint32_t psb = get_u32(p + 16);
    if (d == 0) throw IoError(path.string() + ": feature_dim 0 at offset 10");
    if (c < 2) throw IoError(path.string() + ": num_classes < 2 at offset 14");

    const std::size_t record = static_cast<std::size_t>(d) * 8 + 2;
    const std::size_t expected = kHeaderBytes + static_cast<std::size_t>(n) * record;
    if (buf.size() != expected) {
        throw IoError(path.string() + ": payload length mismatch, expected " +
                      std::to_string(expected) + " bytes, got " +
                      std::to_string(buf.size()) + " (offset " +
                      std::to_string(kHeaderBytes) + ")");
    }

    Dataset data;
    data.feature_dim = d;
    data.num_classes = c;
    data.per_sample_bytes = psb;
    data.features.resize(static_cast<std::size_t>(n) * d);
    data.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const unsigned char* rec = p + kHeaderBytes + i * record;
        for (std::size_t j = 0; j < d; ++j) {
            const double v = get_f64(rec + j * 8);
            if (!std::isfinite(v)) {
                throw IoError(path.string() + ": non-finite feature in record " +
                              std::to_string(i) + " (offset " +
                              std::to_string(kHeaderBytes + i * record + j * 8) + ")");
            }
            data.features[i * d + j] = v;
        }
        const std::uint16_t label = get_u16(rec + d * 8);
        if (label >= c) {
            throw IoError(path.string() + ": label " + std::to_string(label) +
                          " out of range in record " + std::to_string(i) + " (offset " +
                          std::to_string(kHeaderBytes + i * record + d * 8) + ")");
        }
        data.labels[i] = label;
    }
    return data;
}

}  // namespace prunebench
