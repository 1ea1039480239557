// NEON kernels (AArch64). Same operation order as the scalar reference:
// separate multiply and add, ascending k per output element.

#include <arm_neon.h>

#include "mtfer/simd.hpp"

namespace mtfer::simd::detail {
namespace {

struct F32 {
    using T = float;
    using V = float32x4_t;
    static constexpr std::size_t lanes = 4;
    static V load(const T* p) { return vld1q_f32(p); }
    static void store(T* p, V v) { vst1q_f32(p, v); }
    static V set1(T x) { return vdupq_n_f32(x); }
    static V add(V a, V b) { return vaddq_f32(a, b); }
    static V mul(V a, V b) { return vmulq_f32(a, b); }
};

struct F64 {
    using T = double;
    using V = float64x2_t;
    static constexpr std::size_t lanes = 2;
    static V load(const T* p) { return vld1q_f64(p); }
    static void store(T* p, V v) { vst1q_f64(p, v); }
    static V set1(T x) { return vdupq_n_f64(x); }
    static V add(V a, V b) { return vaddq_f64(a, b); }
    static V mul(V a, V b) { return vmulq_f64(a, b); }
};

template <class S>
void gemm(std::size_t m, std::size_t n, std::size_t k, const typename S::T* a, std::size_t lda,
          const typename S::T* b, std::size_t ldb, typename S::T* c, std::size_t ldc) {
    using T = typename S::T;
    using V = typename S::V;
    constexpr std::size_t L = S::lanes;
    const std::size_t n2 = n - n % (2 * L);
    for (std::size_t i = 0; i < m; ++i) {
        T* crow = c + i * ldc;
        const T* arow = a + i * lda;
        for (std::size_t j = 0; j < n2; j += 2 * L) {
            V c0 = S::load(crow + j), c1 = S::load(crow + j + L);
            for (std::size_t p = 0; p < k; ++p) {
                const V av = S::set1(arow[p]);
                c0 = S::add(c0, S::mul(av, S::load(b + p * ldb + j)));
                c1 = S::add(c1, S::mul(av, S::load(b + p * ldb + j + L)));
            }
            S::store(crow + j, c0);
            S::store(crow + j + L, c1);
        }
        if (n2 == n) continue;
        for (std::size_t p = 0; p < k; ++p) {
            const T aip = arow[p];
            const T* brow = b + p * ldb;
            for (std::size_t j = n2; j < n; ++j) crow[j] = crow[j] + aip * brow[j];
        }
    }
}

template <class S>
void axpy(std::size_t n, typename S::T alpha, const typename S::T* x, typename S::T* y) {
    constexpr std::size_t L = S::lanes;
    const auto va = S::set1(alpha);
    std::size_t i = 0;
    for (; i + L <= n; i += L) S::store(y + i, S::add(S::load(y + i), S::mul(va, S::load(x + i))));
    for (; i < n; ++i) y[i] = y[i] + alpha * x[i];
}

template <class S>
void mul(std::size_t n, const typename S::T* x, const typename S::T* y, typename S::T* out) {
    constexpr std::size_t L = S::lanes;
    std::size_t i = 0;
    for (; i + L <= n; i += L) S::store(out + i, S::mul(S::load(x + i), S::load(y + i)));
    for (; i < n; ++i) out[i] = x[i] * y[i];
}

template <class T>
void relu(std::size_t n, const T* x, T* out) {
    // Compiler-vectorized; a comparison select has no rounding to reproduce.
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i] > T(0) ? x[i] : T(0);
}

}  // namespace

const KernelTable& neon_table() {
    static const KernelTable table{
        gemm<F32>, gemm<F64>, axpy<F32>, axpy<F64>, mul<F32>, mul<F64>, relu<float>, relu<double>,
    };
    return table;
}

}  // namespace mtfer::simd::detail
