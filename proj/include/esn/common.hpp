#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>

namespace esn {

/// Error hierarchy. Callers map these onto process exit codes:
/// config_error and shape_error are validation failures (exit 2),
/// io_error and numerical_error are runtime failures (exit 1).
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct config_error : error {
    using error::error;
};
struct io_error : error {
    using error::error;
};
struct shape_error : error {
    using error::error;
};
struct numerical_error : error {
    using error::error;
};

enum class LogLevel { error = 0, warn = 1, info = 2, debug = 3 };

void set_log_level(LogLevel level);
LogLevel log_level();
LogLevel log_level_from_string(const std::string& name);

/// Writes to stderr; results stay on stdout / in files.
void log_message(LogLevel level, const std::string& msg);

inline void log_error(const std::string& m) { log_message(LogLevel::error, m); }
inline void log_warn(const std::string& m) { log_message(LogLevel::warn, m); }
inline void log_info(const std::string& m) { log_message(LogLevel::info, m); }
inline void log_debug(const std::string& m) { log_message(LogLevel::debug, m); }

/// Deterministic random stream. All floating draws go through the 53-bit
/// mapping below instead of std distributions, so a seed pins the exact
/// sequence independent of the standard library implementation.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1).
    double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform on [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

    /// Uniform integer on [lo, hi], both ends inclusive.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

    /// Standard normal deviate (Box-Muller).
    double normal();

private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

/// Runs fn(0..n-1) on up to `jobs` worker threads. Results must be written to
/// per-index slots; the first exception is rethrown after all workers join.
void parallel_for(long n, int jobs, const std::function<void(long)>& fn);

}  // namespace esn
