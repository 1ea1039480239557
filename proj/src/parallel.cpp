#include "mtfer/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

#include "mtfer/errors.hpp"
#include "mtfer/simd.hpp"

namespace mtfer {
namespace {
std::atomic<bool> g_deterministic{false};
std::atomic<std::size_t> g_threads{0};
}  // namespace

void set_deterministic(bool on) { g_deterministic = on; }
bool deterministic() { return g_deterministic; }

void set_thread_count(std::size_t n) { g_threads = n; }

std::size_t effective_threads() {
    if (g_deterministic) return 1;
    std::size_t n = g_threads;
    if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
    return n;
}

void configure_from_environment() {
    if (const char* d = std::getenv("MTFER_DETERMINISTIC"); d && std::string(d) == "1") set_deterministic(true);
    if (const char* t = std::getenv("MTFER_THREADS")) {
        try {
            set_thread_count(static_cast<std::size_t>(std::stoul(t)));
        } catch (const std::exception&) {
            throw ConfigError(std::string("MTFER_THREADS must be a non-negative integer, got '") + t + "'");
        }
    }
    if (const char* s = std::getenv("MTFER_SIMD")) {
        auto b = simd::parse_backend(s);
        if (!b) throw ConfigError(std::string("MTFER_SIMD must be scalar, avx2 or neon, got '") + s + "'");
        simd::set_backend(*b);
    }
}

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn) {
    const std::size_t workers = std::min(effective_threads(), n);
    if (workers <= 1) {
        if (n) fn(0, n);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 1; w < workers; ++w) {
        const std::size_t b = w * chunk, e = std::min(n, b + chunk);
        if (b < e) pool.emplace_back([&fn, b, e] { fn(b, e); });
    }
    fn(0, std::min(n, chunk));
    for (auto& t : pool) t.join();
}

}  // namespace mtfer
