#include "prunebench/common.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace prunebench {

namespace {

LogLevel level_from_env() {
    const char* env = std::getenv("PRUNEBENCH_LOG");
    if (!env) return LogLevel::Warn;
    if (std::strcmp(env, "quiet") == 0) return LogLevel::Quiet;
    if (std::strcmp(env, "error") == 0) return LogLevel::Error;
    if (std::strcmp(env, "warn") == 0) return LogLevel::Warn;
    if (std::strcmp(env, "info") == 0) return LogLevel::Info;
    if (std::strcmp(env, "debug") == 0) return LogLevel::Debug;
    return LogLevel::Warn;
}

LogLevel g_level = level_from_env();

const char* tag(LogLevel level) {
    switch (level) {
        case LogLevel::Error: return "error";
        case LogLevel::Warn: return "warn";
        case LogLevel::Info: return "info";
        case LogLevel::Debug: return "debug";
        default: return "";
    }
}

}  // namespace

LogLevel log_level() { return g_level; }

void set_log_level(LogLevel level) { g_level = level; }

void log_msg(LogLevel level, const std::string& msg) {
    if (level > g_level || level == LogLevel::Quiet) return;
    std::fprintf(stderr, "[prunebench %s] %s\n", tag(level), msg.c_str());
}

}  // namespace prunebench
