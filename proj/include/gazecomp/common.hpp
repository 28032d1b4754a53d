#pragma once

#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace gazecomp {

inline constexpr const char* kToolVersion = "gazecomp 0.1.0";

// Error taxonomy. The CLI maps these onto machine-readable error kinds and
// exit codes, so new failure modes should get their own type rather than a
// bare runtime_error.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
    virtual const char* kind() const { return "error"; }
};

struct ShapeError : Error {
    using Error::Error;
    const char* kind() const override { return "shape"; }
};

struct NumericError : Error {
    using Error::Error;
    const char* kind() const override { return "numeric"; }
};

struct OptimError : Error {
    using Error::Error;
    const char* kind() const override { return "optimization"; }
};

struct TrainingError : Error {
    using Error::Error;
    const char* kind() const override { return "training"; }
};

struct UndefinedMetricError : Error {
    using Error::Error;
    const char* kind() const override { return "undefined-metric"; }
};

struct IoError : Error {
    using Error::Error;
    const char* kind() const override { return "io"; }
};

struct TruncationError : IoError {
    using IoError::IoError;
    const char* kind() const override { return "truncation"; }
};

struct FormatInconsistencyError : IoError {
    using IoError::IoError;
    const char* kind() const override { return "format-inconsistency"; }
};

struct VersionMismatchError : IoError {
    using IoError::IoError;
    const char* kind() const override { return "version-mismatch"; }
};

struct ConfigMismatchError : Error {
    using Error::Error;
    const char* kind() const override { return "config-mismatch"; }
};

// Generated benchmark failed a sanity invariant (e.g. mistakes are not
// separable from correct behavior, making the data unlearnable).
struct BenchmarkError : Error {
    using Error::Error;
    const char* kind() const override { return "benchmark"; }
};

struct UsageError : Error {
    using Error::Error;
    const char* kind() const override { return "usage"; }
};

enum class LogLevel { Quiet = 0, Warn = 1, Info = 2, Debug = 3 };

// Verbosity comes from the GAZECOMP_LOG environment variable
// (quiet|warn|info|debug), default info.
LogLevel log_level();
void log_line(LogLevel level, const std::string& msg);

inline void log_info(const std::string& msg) { log_line(LogLevel::Info, msg); }
inline void log_warn(const std::string& msg) { log_line(LogLevel::Warn, msg); }
inline void log_debug(const std::string& msg) { log_line(LogLevel::Debug, msg); }

}  // namespace gazecomp
