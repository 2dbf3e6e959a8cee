#pragma once

// Strict JSON config ingestion. Unknown keys are rejected, every nested
// invariant is enforced at parse time, and errors carry a JSON-pointer-style
// path to the offending field. Defaults are filled in and echoed back via
// the resolved snapshot, whose canonical serialization (sorted keys) feeds
// the config hash.

#include <filesystem>
#include <string>
#include <vector>

#include "prunebench/fleet.hpp"

namespace prunebench {

ExperimentConfig parse_config(const std::filesystem::path& path);
ExperimentConfig parse_config_text(const std::string& text);

/// The dataset block alone (a {"num_samples": ...} spec object), as used by
/// `prunebench gen-data`.
DatasetSpec parse_dataset_spec(const std::filesystem::path& path);

/// Canonical resolved snapshot: all defaults filled, keys sorted, no
/// whitespace. Stable under key reordering of the source file.
std::string resolved_config_json(const ExperimentConfig& cfg);

/// FNV-1a 64-bit over the canonical snapshot, as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

std::uint64_t fnv1a64(std::string_view bytes);

struct RunManifest {
    std::string artifact_version;
    std::string config_hash;
    std::string command;
    std::string created_utc;
    std::string resolved_config;  // canonical JSON text
    std::string protocol;         // comparison-protocol note for auditability
    std::vector<std::string> outputs;
};

RunManifest make_manifest(const ExperimentConfig& cfg, const std::string& command,
                          std::vector<std::string> outputs);

void write_manifest(const RunManifest& manifest, const std::filesystem::path& path);

}  // namespace prunebench
