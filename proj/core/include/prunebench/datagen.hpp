#pragma once

// Synthetic classification corpora, IID / Dirichlet partitioning across
// devices, and the on-disk dataset format.
//
// Class means sit at the vertices of a regular simplex (Helmert embedding,
// pairwise distance exactly class_separation), so every pair of classes is
// equally separated. Samples are mean + isotropic Gaussian noise. A
// label_noise fraction of labels is re-drawn uniformly so that genuinely
// hard-to-fit samples exist.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace prunebench {

struct DatasetSpec {
    std::size_t num_samples = 0;
    int num_classes = 0;
    std::size_t feature_dim = 0;
    double class_separation = 0.0;  // distance between class mean clusters
    double noise_std = 0.0;
    double label_noise = 0.0;  // fraction of labels re-drawn uniformly
    std::uint64_t seed = 0;

    /// Throws ConfigError on invariant violations. The simplex construction
    /// additionally requires feature_dim >= num_classes - 1.
    void validate() const;
};

struct Dataset {
    std::size_t feature_dim = 0;
    int num_classes = 0;
    std::vector<double> features;  // num_samples x feature_dim, row-major
    std::vector<int> labels;
    std::uint32_t per_sample_bytes = 0;  // storage model input, sigma-bar

    std::size_t size() const { return labels.size(); }
    std::span<const double> row(std::size_t n) const {
        return {features.data() + n * feature_dim, feature_dim};
    }
};

/// Default storage accounting: 64-bit features plus a 16-bit label.
constexpr std::uint32_t default_per_sample_bytes(std::size_t feature_dim) {
    return static_cast<std::uint32_t>(feature_dim * 8 + 2);
}

enum class PartitionScheme { Iid, Dirichlet };

struct PartitionSpec {
    int num_devices = 1;
    PartitionScheme scheme = PartitionScheme::Iid;
    double beta = 0.0;  // Dirichlet concentration; required > 0 for dirichlet
    std::uint64_t seed = 0;

    void validate() const;
};

/// One device's shard. Local sample indices are 0..size()-1 in construction
/// order and are never reordered afterwards (index-based tie-breaking in the
/// pruner depends on this).
struct DeviceDataset {
    int device_id = 0;
    std::size_t feature_dim = 0;
    int num_classes = 0;
    std::vector<double> features;
    std::vector<int> labels;
    std::uint32_t per_sample_bytes = 0;

    std::size_t size() const { return labels.size(); }
    std::span<const double> row(std::size_t n) const {
        return {features.data() + n * feature_dim, feature_dim};
    }
};

Dataset generate_synthetic(const DatasetSpec& spec);

/// Every sample lands on exactly one device. iid: random equal split, the
/// first (n mod K) devices get one extra sample. dirichlet: per-class device
/// proportions drawn from Dirichlet(beta,...,beta); allocations that leave a
/// device empty are re-drawn (up to 100 times, then error).
std::vector<DeviceDataset> partition(const Dataset& data, const PartitionSpec& spec);

std::uint64_t storage_bytes(const Dataset& data, std::uint64_t count);
std::uint64_t storage_bytes(const DeviceDataset& shard, std::uint64_t count);

/// Whole corpus as a single shard (evaluation sets, single-device runs).
DeviceDataset as_device(const Dataset& data, int device_id = 0);

/// Rows of `data` selected by `rows`, in that order, as a new corpus.
Dataset subset(const Dataset& data, std::span<const std::uint32_t> rows);

/// Binary dataset file, little-endian: magic "PBDS", u16 version=1,
/// u32 num_samples, u32 feature_dim, u16 num_classes, u32 per_sample_bytes,
/// then num_samples records of (feature_dim x f64, u16 label).
void save_dataset(const Dataset& data, const std::filesystem::path& path);

/// Loads either the binary format above or, for ".csv" paths, a CSV file
/// with header row "f0,...,f{d-1},label". Round-trips of save_dataset are
/// bit-exact. Throws IoError naming the byte offset on malformed input.
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace prunebench
