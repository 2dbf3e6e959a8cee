#pragma once

// Command-line surface. Subcommands: gen-data, run, sweep, report.
// Exit codes: 0 success, 2 config/usage error, 3 pipeline error, 4 I/O error.

#include <filesystem>
#include <string>
#include <vector>

namespace prunebench::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitPipeline = 3;
inline constexpr int kExitIo = 4;

struct Overrides {
    int workers = 0;                       // 0 = keep config value
    std::vector<std::uint64_t> seeds;      // empty = keep config value
};

int cmd_gen_data(const std::filesystem::path& spec_path,
                 const std::filesystem::path& out_path);

int cmd_run(const std::filesystem::path& config_path,
            const std::filesystem::path& out_dir, const Overrides& ov = {});

int cmd_sweep(const std::filesystem::path& config_path, const std::vector<double>& rhos,
              const std::filesystem::path& out_dir, const Overrides& ov = {});

int cmd_report(const std::filesystem::path& out_dir);

/// Parses argv and dispatches; never throws.
int run_cli(int argc, const char* const* argv);
int run_cli(const std::vector<std::string>& args);  // args without argv[0]

}  // namespace prunebench::cli
