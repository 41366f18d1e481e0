#include "esn/common.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <numbers>
#include <thread>
#include <vector>

namespace esn {

namespace {
std::atomic<LogLevel> g_level{LogLevel::warn};

const char* level_name(LogLevel l)
{
    switch (l) {
        case LogLevel::error: return "error";
        case LogLevel::warn: return "warn";
        case LogLevel::info: return "info";
        case LogLevel::debug: return "debug";
    }
    return "?";
}
}  // namespace

void set_log_level(LogLevel level)
{
    g_level.store(level);
}

LogLevel log_level()
{
    return g_level.load();
}

LogLevel log_level_from_string(const std::string& name)
{
    if (name == "error") return LogLevel::error;
    if (name == "warn") return LogLevel::warn;
    if (name == "info") return LogLevel::info;
    if (name == "debug") return LogLevel::debug;
    throw config_error("unknown log level '" + name + "'");
}

void log_message(LogLevel level, const std::string& msg)
{
    if (static_cast<int>(level) > static_cast<int>(g_level.load())) return;
    std::fprintf(stderr, "[%s] %s\n", level_name(level), msg.c_str());
}

std::int64_t Rng::uniform_int(std::int64_t lo, std::int64_t hi)
{
    if (hi < lo) throw config_error("uniform_int: hi < lo");
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(engine_() % span);
}

void parallel_for(long n, int jobs, const std::function<void(long)>& fn)
{
    if (n <= 0) return;
    jobs = std::max(1, jobs);
    if (jobs == 1 || n == 1) {
        for (long i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<long> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const long i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> threads;
    const int n_threads = static_cast<int>(std::min<long>(jobs, n));
    threads.reserve(n_threads);
    for (int t = 0; t < n_threads; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

double Rng::normal()
{
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    // Box-Muller on the deterministic unit() stream.
    double u1 = unit();
    while (u1 <= 0.0) u1 = unit();
    const double u2 = unit();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
}

}  // namespace esn
