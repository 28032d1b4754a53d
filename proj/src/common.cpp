#include "gazecomp/common.hpp"

#include <mutex>

namespace gazecomp {

LogLevel log_level() {
    static LogLevel cached = [] {
        const char* env = std::getenv("GAZECOMP_LOG");
        if (!env) return LogLevel::Info;
        std::string v(env);
        if (v == "quiet") return LogLevel::Quiet;
        if (v == "warn") return LogLevel::Warn;
        if (v == "debug") return LogLevel::Debug;
        return LogLevel::Info;
    }();
    return cached;
}

void log_line(LogLevel level, const std::string& msg) {
    if (static_cast<int>(level) > static_cast<int>(log_level())) return;
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    const char* tag = level == LogLevel::Warn ? "warn" : level == LogLevel::Debug ? "debug" : "info";
    std::cerr << "[" << tag << "] " << msg << "\n";
}

}  // namespace gazecomp
