// Reference kernels. These define the exact operation order that the SIMD
// backends must reproduce.

#include "mtfer/simd.hpp"

namespace mtfer::simd::detail {
namespace {

template <class T>
void gemm(std::size_t m, std::size_t n, std::size_t k, const T* a, std::size_t lda, const T* b,
          std::size_t ldb, T* c, std::size_t ldc) {
    for (std::size_t i = 0; i < m; ++i) {
        T* crow = c + i * ldc;
        for (std::size_t p = 0; p < k; ++p) {
            const T aip = a[i * lda + p];
            const T* brow = b + p * ldb;
            for (std::size_t j = 0; j < n; ++j) crow[j] = crow[j] + aip * brow[j];
        }
    }
}

template <class T>
void axpy(std::size_t n, T alpha, const T* x, T* y) {
    for (std::size_t i = 0; i < n; ++i) y[i] = y[i] + alpha * x[i];
}

template <class T>
void mul(std::size_t n, const T* x, const T* y, T* out) {
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i] * y[i];
}

template <class T>
void relu(std::size_t n, const T* x, T* out) {
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i] > T(0) ? x[i] : T(0);
}

}  // namespace

const KernelTable& scalar_table() {
    static const KernelTable table{
        gemm<float>, gemm<double>, axpy<float>, axpy<double>,
        mul<float>,  mul<double>,  relu<float>, relu<double>,
    };
    return table;
}

}  // namespace mtfer::simd::detail
