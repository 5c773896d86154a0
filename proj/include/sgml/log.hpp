#pragma once

#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace sgml {

enum class LogLevel { Error = 0, Info = 1, Debug = 2 };

/// Diagnostics level, read once from GDPA_LOG ({error, info, debug}).
inline LogLevel log_level() {
    static const LogLevel level = [] {
        const char* env = std::getenv("GDPA_LOG");
        if (env && std::strcmp(env, "debug") == 0) return LogLevel::Debug;
        if (env && std::strcmp(env, "info") == 0) return LogLevel::Info;
        return LogLevel::Error;
    }();
    return level;
}

inline void log_at(LogLevel level, const char* fmt, ...) {
    if (level > log_level()) return;
    std::va_list args;
    va_start(args, fmt);
    std::vfprintf(stderr, fmt, args);
    std::fputc('\n', stderr);
    va_end(args);
}

} // namespace sgml
