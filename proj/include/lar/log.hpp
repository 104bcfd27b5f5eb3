#pragma once

#include <cstdio>

namespace lar {

enum class LogLevel { debug = 0, info = 1, warn = 2, error = 3 };

// Process-wide threshold; messages go to stderr so artifacts stay clean.
LogLevel& log_threshold();

void log_msg(LogLevel level, const char* fmt, ...)
#if defined(__GNUC__)
    __attribute__((format(printf, 2, 3)))
#endif
    ;

#define LAR_DEBUG(...) ::lar::log_msg(::lar::LogLevel::debug, __VA_ARGS__)
#define LAR_INFO(...) ::lar::log_msg(::lar::LogLevel::info, __VA_ARGS__)
#define LAR_WARN(...) ::lar::log_msg(::lar::LogLevel::warn, __VA_ARGS__)
#define LAR_ERROR(...) ::lar::log_msg(::lar::LogLevel::error, __VA_ARGS__)

}  // namespace lar
