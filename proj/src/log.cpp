#include "lar/log.hpp"

#include <cstdarg>
#include <mutex>

namespace lar {

LogLevel& log_threshold() {
    static LogLevel level = LogLevel::info;
    return level;
}

void log_msg(LogLevel level, const char* fmt, ...) {
    if (level < log_threshold()) return;
    static std::mutex mu;
    static const char* names[] = {"DEBUG", "INFO", "WARN", "ERROR"};
    std::lock_guard<std::mutex> lk(mu);
    std::fprintf(stderr, "[%s] ", names[static_cast<int>(level)]);
    va_list args;
    va_start(args, fmt);
    std::vfprintf(stderr, fmt, args);
    va_end(args);
    std::fputc('\n', stderr);
}

}  // namespace lar
