#include <atomic>
#include <cstdlib>
#include <string>

#include "mtfer/errors.hpp"
#include "mtfer/simd.hpp"

namespace mtfer::simd {
namespace {

bool cpu_supports(Backend b) {
    switch (b) {
        case Backend::scalar:
            return true;
        case Backend::avx2:
#if defined(MTFER_HAVE_AVX2)
            return __builtin_cpu_supports("avx2");
#else
            return false;
#endif
        case Backend::neon:
#if defined(MTFER_HAVE_NEON)
            return true;
#else
            return false;
#endif
    }
    return false;
}

Backend pick_default() {
    if (const char* env = std::getenv("MTFER_SIMD")) {
        if (auto b = parse_backend(env); b && cpu_supports(*b)) return *b;
    }
    if (cpu_supports(Backend::avx2)) return Backend::avx2;
    if (cpu_supports(Backend::neon)) return Backend::neon;
    return Backend::scalar;
}

std::atomic<const KernelTable*>& active_table() {
    static std::atomic<const KernelTable*> table{&kernels(pick_default())};
    return table;
}

std::atomic<Backend>& active() {
    static std::atomic<Backend> b{pick_default()};
    return b;
}

}  // namespace

std::string_view backend_name(Backend b) {
    switch (b) {
        case Backend::scalar:
            return "scalar";
        case Backend::avx2:
            return "avx2";
        case Backend::neon:
            return "neon";
    }
    return "unknown";
}

std::optional<Backend> parse_backend(std::string_view name) {
    if (name == "scalar") return Backend::scalar;
    if (name == "avx2") return Backend::avx2;
    if (name == "neon") return Backend::neon;
    return std::nullopt;
}

bool backend_available(Backend b) { return cpu_supports(b); }

Backend active_backend() { return active().load(); }

void set_backend(Backend b) {
    if (!cpu_supports(b)) {
        throw UsageError("SIMD backend '" + std::string(backend_name(b)) + "' is not available on this CPU/build");
    }
    active().store(b);
    active_table().store(&kernels(b));
}

const KernelTable& kernels() { return *active_table().load(std::memory_order_relaxed); }

const KernelTable& kernels(Backend b) {
    switch (b) {
#if defined(MTFER_HAVE_AVX2)
        case Backend::avx2:
            return detail::avx2_table();
#endif
#if defined(MTFER_HAVE_NEON)
        case Backend::neon:
            return detail::neon_table();
#endif
        default:
            return detail::scalar_table();
    }
}

}  // namespace mtfer::simd
