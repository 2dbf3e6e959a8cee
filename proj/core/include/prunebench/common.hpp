#pragma once

#include <stdexcept>
#include <string>

namespace prunebench {

inline constexpr const char* kVersion = "0.1.0";

/// Base class for all prunebench errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Invalid specs, configs, or schema violations. CLI exit code 2.
struct ConfigError : Error {
    using Error::Error;
};

/// Contract violations raised while a pipeline is running. CLI exit code 3.
struct PipelineError : Error {
    using Error::Error;
};

/// Filesystem and serialization failures. CLI exit code 4.
struct IoError : Error {
    using Error::Error;
};

enum class LogLevel { Quiet = 0, Error = 1, Warn = 2, Info = 3, Debug = 4 };

/// Global log verbosity, initialized from the PRUNEBENCH_LOG environment
/// variable ("quiet", "error", "warn", "info", "debug"). Defaults to warn.
LogLevel log_level();
void set_log_level(LogLevel level);

void log_msg(LogLevel level, const std::string& msg);

inline void log_error(const std::string& msg) { log_msg(LogLevel::Error, msg); }
inline void log_warn(const std::string& msg) { log_msg(LogLevel::Warn, msg); }
inline void log_info(const std::string& msg) { log_msg(LogLevel::Info, msg); }
inline void log_debug(const std::string& msg) { log_msg(LogLevel::Debug, msg); }

}  // namespace prunebench
