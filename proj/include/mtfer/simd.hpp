#pragma once

#include <cstddef>
#include <optional>
#include <string_view>

// Runtime-dispatched arithmetic kernels. Every backend evaluates each output
// element with the same sequence of IEEE operations as the scalar reference
// (no fused multiply-add, no reassociated reductions), so switching backends
// never changes a result bit.

namespace mtfer::simd {

enum class Backend { scalar, avx2, neon };

std::string_view backend_name(Backend b);
std::optional<Backend> parse_backend(std::string_view name);

/// Compiled in and supported by the running CPU.
bool backend_available(Backend b);

/// Best available backend unless overridden by set_backend() or MTFER_SIMD.
Backend active_backend();

/// Throws UsageError if the backend is not available.
void set_backend(Backend b);

struct KernelTable {
    // C[m x n] += A[m x k] * B[k x n], row-major with leading dimensions.
    void (*gemm_f32)(std::size_t m, std::size_t n, std::size_t k, const float* a, std::size_t lda,
                     const float* b, std::size_t ldb, float* c, std::size_t ldc);
    void (*gemm_f64)(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
                     const double* b, std::size_t ldb, double* c, std::size_t ldc);
    // y += alpha * x
    void (*axpy_f32)(std::size_t n, float alpha, const float* x, float* y);
    void (*axpy_f64)(std::size_t n, double alpha, const double* x, double* y);
    // out = x * y (elementwise)
    void (*mul_f32)(std::size_t n, const float* x, const float* y, float* out);
    void (*mul_f64)(std::size_t n, const double* x, const double* y, double* out);
    // out = x > 0 ? x : 0
    void (*relu_f32)(std::size_t n, const float* x, float* out);
    void (*relu_f64)(std::size_t n, const double* x, double* out);
};

const KernelTable& kernels();
const KernelTable& kernels(Backend b);

template <class T>
inline void gemm_accumulate(std::size_t m, std::size_t n, std::size_t k, const T* a, std::size_t lda,
                            const T* b, std::size_t ldb, T* c, std::size_t ldc) {
    if constexpr (sizeof(T) == 4) {
        kernels().gemm_f32(m, n, k, a, lda, b, ldb, c, ldc);
    } else {
        kernels().gemm_f64(m, n, k, a, lda, b, ldb, c, ldc);
    }
}

template <class T>
inline void axpy(std::size_t n, T alpha, const T* x, T* y) {
    if constexpr (sizeof(T) == 4) {
        kernels().axpy_f32(n, alpha, x, y);
    } else {
        kernels().axpy_f64(n, alpha, x, y);
    }
}

template <class T>
inline void mul(std::size_t n, const T* x, const T* y, T* out) {
    if constexpr (sizeof(T) == 4) {
        kernels().mul_f32(n, x, y, out);
    } else {
        kernels().mul_f64(n, x, y, out);
    }
}

template <class T>
inline void relu(std::size_t n, const T* x, T* out) {
    if constexpr (sizeof(T) == 4) {
        kernels().relu_f32(n, x, out);
    } else {
        kernels().relu_f64(n, x, out);
    }
}

/// dst[c x r] = src[r x c]^T. Pure data movement, shared by all backends.
template <class T>
inline void transpose(std::size_t rows, std::size_t cols, const T* src, std::size_t lds, T* dst,
                      std::size_t ldd) {
    constexpr std::size_t tile = 32;
    for (std::size_t i0 = 0; i0 < rows; i0 += tile) {
        const std::size_t i1 = i0 + tile < rows ? i0 + tile : rows;
        for (std::size_t j0 = 0; j0 < cols; j0 += tile) {
            const std::size_t j1 = j0 + tile < cols ? j0 + tile : cols;
            for (std::size_t i = i0; i < i1; ++i) {
                for (std::size_t j = j0; j < j1; ++j) dst[j * ldd + i] = src[i * lds + j];
            }
        }
    }
}

namespace detail {
const KernelTable& scalar_table();
#if defined(MTFER_HAVE_AVX2)
const KernelTable& avx2_table();
#endif
#if defined(MTFER_HAVE_NEON)
const KernelTable& neon_table();
#endif
}  // namespace detail

}  // namespace mtfer::simd
