#include "mtfer/tensor.hpp"

#include <cmath>
#include <sstream>

#include "mtfer/simd.hpp"

namespace mtfer {

std::string shape_to_string(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << 'x';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

std::size_t shape_size(const Shape& shape) {
    std::size_t n = 1;
    for (auto d : shape) {
        if (d == 0) throw DimensionError("zero dimension in shape " + shape_to_string(shape));
        n *= d;
    }
    return n;
}

template <class T>
Tensor<T>::Tensor(Shape shape, T fill) : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

template <class T>
Tensor<T>::Tensor(Shape shape, std::vector<T> values) : shape_(std::move(shape)), data_(std::move(values)) {
    if (shape_size(shape_) != data_.size()) {
        throw DimensionError("shape " + shape_to_string(shape_) + " needs " +
                             std::to_string(shape_size(shape_)) + " values, got " +
                             std::to_string(data_.size()));
    }
}

template <class T>
std::size_t Tensor<T>::offset(std::initializer_list<std::size_t> index) const {
    if (index.size() != shape_.size()) {
        throw DimensionError("index of rank " + std::to_string(index.size()) + " into tensor " +
                             shape_to_string(shape_));
    }
    std::size_t off = 0;
    std::size_t axis = 0;
    for (auto i : index) {
        if (i >= shape_[axis]) {
            throw DimensionError("index " + std::to_string(i) + " out of range on axis " +
                                 std::to_string(axis) + " of " + shape_to_string(shape_));
        }
        off = off * shape_[axis] + i;
        ++axis;
    }
    return off;
}

template <class T>
Tensor<T> Tensor<T>::reshaped(Shape shape) const {
    Tensor out = *this;
    out.reshape(std::move(shape));
    return out;
}

template <class T>
void Tensor<T>::reshape(Shape shape) {
    if (shape_size(shape) != data_.size()) {
        throw DimensionError("cannot reshape " + shape_to_string(shape_) + " to " + shape_to_string(shape));
    }
    shape_ = std::move(shape);
}

template <class T>
bool Tensor<T>::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](T v) { return std::isfinite(v); });
}

template <class T>
void Tensor<T>::require_finite(const char* what) const {
    if (!all_finite()) throw NumericError(std::string("non-finite value in ") + what);
}

template <class T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
        throw DimensionError("matmul shape mismatch: " + shape_to_string(a.shape()) + " x " +
                             shape_to_string(b.shape()));
    }
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    Tensor<T> c({m, n});
    simd::gemm_accumulate<T>(m, n, k, a.data(), k, b.data(), n, c.data(), n);
    return c;
}

template <class T>
Tensor<T> transpose(const Tensor<T>& a) {
    if (a.rank() != 2) throw DimensionError("transpose expects rank 2, got " + shape_to_string(a.shape()));
    const std::size_t r = a.dim(0), c = a.dim(1);
    Tensor<T> out({c, r});
    simd::transpose<T>(r, c, a.data(), c, out.data(), r);
    return out;
}

template <class T>
Tensor<T> rng_uniform(Rng& rng, const Shape& shape, double lo, double hi) {
    if (!(lo < hi)) {
        throw RangeError("rng_uniform requires lo < hi, got lo=" + std::to_string(lo) +
                         " hi=" + std::to_string(hi));
    }
    Tensor<T> out(shape);
    const T top = static_cast<T>(hi);
    for (auto& v : out.values()) {
        T x = static_cast<T>(rng.uniform(lo, hi));
        // Narrowing to float may round onto the open upper bound.
        if (x >= top) x = std::nextafter(top, static_cast<T>(lo));
        v = x;
    }
    return out;
}

template <class T>
double max_abs_diff(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.shape() != b.shape()) {
        throw DimensionError("max_abs_diff shape mismatch: " + shape_to_string(a.shape()) + " vs " +
                             shape_to_string(b.shape()));
    }
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        m = std::max(m, std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i])));
    }
    return m;
}

#define MTFER_INSTANTIATE(T)                                                        \
    template class Tensor<T>;                                                       \
    template Tensor<T> matmul<T>(const Tensor<T>&, const Tensor<T>&);               \
    template Tensor<T> transpose<T>(const Tensor<T>&);                              \
    template Tensor<T> rng_uniform<T>(Rng&, const Shape&, double, double);          \
    template double max_abs_diff<T>(const Tensor<T>&, const Tensor<T>&);

MTFER_INSTANTIATE(float)
MTFER_INSTANTIATE(double)
#undef MTFER_INSTANTIATE

}  // namespace mtfer
