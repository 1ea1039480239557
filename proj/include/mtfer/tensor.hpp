#pragma once

#include <algorithm>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "mtfer/errors.hpp"
#include "mtfer/rng.hpp"

namespace mtfer {

using Shape = std::vector<std::size_t>;

std::string shape_to_string(const Shape& shape);

/// Number of elements described by a shape; throws DimensionError on a zero
/// dimension.
std::size_t shape_size(const Shape& shape);

/// Dense row-major tensor. A default-constructed tensor is empty (rank 0, no
/// data) and only serves as a placeholder; every other tensor has positive
/// dimensions and exactly product(shape) elements.
template <class T>
class Tensor {
public:
    using value_type = T;

    Tensor() = default;
    explicit Tensor(Shape shape, T fill = T{});
    Tensor(Shape shape, std::vector<T> values);

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    T* data() noexcept { return data_.data(); }
    const T* data() const noexcept { return data_.data(); }
    std::span<T> values() noexcept { return data_; }
    std::span<const T> values() const noexcept { return data_; }
    const std::vector<T>& storage() const noexcept { return data_; }

    T& operator[](std::size_t i) noexcept { return data_[i]; }
    const T& operator[](std::size_t i) const noexcept { return data_[i]; }

    /// Bounds-checked multi-index access.
    template <class... Idx>
    T& at(Idx... idx) {
        return data_[offset({static_cast<std::size_t>(idx)...})];
    }
    template <class... Idx>
    const T& at(Idx... idx) const {
        return data_[offset({static_cast<std::size_t>(idx)...})];
    }

    std::size_t offset(std::initializer_list<std::size_t> index) const;

    /// Same data under a new shape of equal size.
    Tensor reshaped(Shape shape) const;
    void reshape(Shape shape);

    void fill(T v) { std::fill(data_.begin(), data_.end(), v); }
    bool all_finite() const;

    /// Throws NumericError naming `what` if any element is NaN or infinite.
    void require_finite(const char* what) const;

    template <class U>
    Tensor<U> cast() const {
        std::vector<U> out(data_.begin(), data_.end());
        return Tensor<U>(shape_, std::move(out));
    }

    friend bool operator==(const Tensor& a, const Tensor& b) {
        return a.shape_ == b.shape_ && a.data_ == b.data_;
    }

private:
    Shape shape_;
    std::vector<T> data_;
};

/// c = a · b for rank-2 tensors.
template <class T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);

/// Rank-2 transpose.
template <class T>
Tensor<T> transpose(const Tensor<T>& a);

/// Tensor of independent draws from U[lo, hi). Throws RangeError unless lo < hi.
template <class T>
Tensor<T> rng_uniform(Rng& rng, const Shape& shape, double lo, double hi);

/// Largest |a-b| over equal-shaped tensors.
template <class T>
double max_abs_diff(const Tensor<T>& a, const Tensor<T>& b);

}  // namespace mtfer
