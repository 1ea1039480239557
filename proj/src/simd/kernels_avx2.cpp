// AVX2 kernels. Multiply and add are issued as separate instructions and each
// output element accumulates over k in ascending order, matching the scalar
// reference bit for bit.

#include <immintrin.h>

#include "mtfer/simd.hpp"

namespace mtfer::simd::detail {
namespace {

struct F32 {
    using T = float;
    using V = __m256;
    static constexpr std::size_t lanes = 8;
    static V load(const T* p) { return _mm256_loadu_ps(p); }
    static void store(T* p, V v) { _mm256_storeu_ps(p, v); }
    static V set1(T x) { return _mm256_set1_ps(x); }
    static V zero() { return _mm256_setzero_ps(); }
    static V add(V a, V b) { return _mm256_add_ps(a, b); }
    static V mul(V a, V b) { return _mm256_mul_ps(a, b); }
    static V max(V a, V b) { return _mm256_max_ps(a, b); }
};

struct F64 {
    using T = double;
    using V = __m256d;
    static constexpr std::size_t lanes = 4;
    static V load(const T* p) { return _mm256_loadu_pd(p); }
    static void store(T* p, V v) { _mm256_storeu_pd(p, v); }
    static V set1(T x) { return _mm256_set1_pd(x); }
    static V zero() { return _mm256_setzero_pd(); }
    static V add(V a, V b) { return _mm256_add_pd(a, b); }
    static V mul(V a, V b) { return _mm256_mul_pd(a, b); }
    static V max(V a, V b) { return _mm256_max_pd(a, b); }
};

// 4 rows x 2 vectors register block.
template <class S>
inline void block_4x2(std::size_t k, const typename S::T* a, std::size_t lda, const typename S::T* b,
                      std::size_t ldb, typename S::T* c, std::size_t ldc) {
    using V = typename S::V;
    constexpr std::size_t L = S::lanes;
    V c00 = S::load(c), c01 = S::load(c + L);
    V c10 = S::load(c + ldc), c11 = S::load(c + ldc + L);
    V c20 = S::load(c + 2 * ldc), c21 = S::load(c + 2 * ldc + L);
    V c30 = S::load(c + 3 * ldc), c31 = S::load(c + 3 * ldc + L);
    for (std::size_t p = 0; p < k; ++p) {
        const V b0 = S::load(b + p * ldb);
        const V b1 = S::load(b + p * ldb + L);
        V a0 = S::set1(a[p]);
        c00 = S::add(c00, S::mul(a0, b0));
        c01 = S::add(c01, S::mul(a0, b1));
        a0 = S::set1(a[lda + p]);
        c10 = S::add(c10, S::mul(a0, b0));
        c11 = S::add(c11, S::mul(a0, b1));
        a0 = S::set1(a[2 * lda + p]);
        c20 = S::add(c20, S::mul(a0, b0));
        c21 = S::add(c21, S::mul(a0, b1));
        a0 = S::set1(a[3 * lda + p]);
        c30 = S::add(c30, S::mul(a0, b0));
        c31 = S::add(c31, S::mul(a0, b1));
    }
    S::store(c, c00);
    S::store(c + L, c01);
    S::store(c + ldc, c10);
    S::store(c + ldc + L, c11);
    S::store(c + 2 * ldc, c20);
    S::store(c + 2 * ldc + L, c21);
    S::store(c + 3 * ldc, c30);
    S::store(c + 3 * ldc + L, c31);
}

// 1 row x 1 vector.
template <class S>
inline void block_1x1(std::size_t k, const typename S::T* a, const typename S::T* b, std::size_t ldb,
                      typename S::T* c) {
    using V = typename S::V;
    V acc = S::load(c);
    for (std::size_t p = 0; p < k; ++p) acc = S::add(acc, S::mul(S::set1(a[p]), S::load(b + p * ldb)));
    S::store(c, acc);
}

template <class S>
void gemm(std::size_t m, std::size_t n, std::size_t k, const typename S::T* a, std::size_t lda,
          const typename S::T* b, std::size_t ldb, typename S::T* c, std::size_t ldc) {
    using T = typename S::T;
    constexpr std::size_t L = S::lanes;
    const std::size_t n2 = n - n % (2 * L);
    const std::size_t n1 = n - n % L;
    const std::size_t m4 = m - m % 4;

    for (std::size_t i = 0; i < m4; i += 4) {
        for (std::size_t j = 0; j < n2; j += 2 * L) block_4x2<S>(k, a + i * lda, lda, b + j, ldb, c + i * ldc + j, ldc);
    }
    for (std::size_t i = m4; i < m; ++i) {
        for (std::size_t j = 0; j < n2; j += L) block_1x1<S>(k, a + i * lda, b + j, ldb, c + i * ldc + j);
    }
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = n2; j < n1; j += L) block_1x1<S>(k, a + i * lda, b + j, ldb, c + i * ldc + j);
        if (n1 == n) continue;
        T* crow = c + i * ldc;
        for (std::size_t p = 0; p < k; ++p) {
            const T aip = a[i * lda + p];
            const T* brow = b + p * ldb;
            for (std::size_t j = n1; j < n; ++j) crow[j] = crow[j] + aip * brow[j];
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

template <class S>
void relu(std::size_t n, const typename S::T* x, typename S::T* out) {
    using T = typename S::T;
    constexpr std::size_t L = S::lanes;
    const auto z = S::zero();
    std::size_t i = 0;
    // max(x, 0) returns the second operand unless x > 0, matching x > 0 ? x : 0.
    for (; i + L <= n; i += L) S::store(out + i, S::max(S::load(x + i), z));
    for (; i < n; ++i) out[i] = x[i] > T(0) ? x[i] : T(0);
}

}  // namespace

const KernelTable& avx2_table() {
    static const KernelTable table{
        gemm<F32>, gemm<F64>, axpy<F32>, axpy<F64>, mul<F32>, mul<F64>, relu<F32>, relu<F64>,
    };
    return table;
}

}  // namespace mtfer::simd::detail
