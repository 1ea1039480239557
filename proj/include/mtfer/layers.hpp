#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "mtfer/rng.hpp"
#include "mtfer/tensor.hpp"

// Forward and backward passes for the layer kinds used by the multi-task
// network. Image tensors are NHWC ([batch, height, width, channels]); a rank-3
// [height, width, channels] tensor is accepted as a batch of one. Dense layers
// take [batch, features] or a rank-1 [features] vector.

namespace mtfer {

enum class LayerKind { conv2d, maxpool, dense, relu, dropout, flatten, softmax_head };
enum class Mode { train, infer };
enum class Padding { same, valid };

std::string_view layer_kind_name(LayerKind kind);

struct LayerHyper {
    std::size_t kernel = 0;     // conv2d: square kernel size
    std::size_t stride = 1;     // conv2d stride
    Padding padding = Padding::same;
    std::size_t window = 2;     // maxpool: square window, stride == window
    double rate = 0.0;          // dropout rate in [0, 1)
};

template <class T>
struct LayerParams {
    LayerKind kind = LayerKind::relu;
    Tensor<T> weights;  // conv2d: [k, k, in, out]; dense / softmax_head: [in, out]
    Tensor<T> bias;     // [out]
    LayerHyper hyper;

    std::size_t parameter_count() const { return weights.size() + bias.size(); }
};

/// Whatever the backward pass needs from one forward call.
template <class T>
struct LayerCache {
    bool filled = false;
    Tensor<T> input;
    Tensor<T> output;                    // softmax
    Tensor<T> mask;                      // dropout (train mode only)
    std::vector<std::uint32_t> argmax;   // maxpool: flat input index per output
    Shape input_shape;
};

template <class T>
struct Forward {
    Tensor<T> output;
    LayerCache<T> cache;
};

template <class T>
struct Gradients {
    Tensor<T> input;    // empty when not requested
    Tensor<T> weights;
    Tensor<T> bias;
};

template <class T>
LayerParams<T> make_conv2d(std::size_t kernel, std::size_t in_channels, std::size_t out_channels,
                           std::size_t stride = 1, Padding padding = Padding::same);

template <class T>
LayerParams<T> make_dense(std::size_t in_features, std::size_t out_features,
                          LayerKind kind = LayerKind::dense);

/// Glorot/Xavier uniform weights, zero bias. For conv kernels the fans are
/// k*k*in and k*k*out.
template <class T>
void init_glorot_uniform(LayerParams<T>& params, Rng& rng);

/// Output spatial extent of a conv along one axis.
std::size_t conv_output_extent(std::size_t in, std::size_t kernel, std::size_t stride, Padding padding);

template <class T>
Forward<T> conv2d_forward(const Tensor<T>& input, const LayerParams<T>& params);
template <class T>
Gradients<T> conv2d_backward(const Tensor<T>& grad_out, const LayerCache<T>& cache,
                             const LayerParams<T>& params, bool want_input_grad = true);

template <class T>
Forward<T> maxpool_forward(const Tensor<T>& input, std::size_t window = 2);
template <class T>
Tensor<T> maxpool_backward(const Tensor<T>& grad_out, const LayerCache<T>& cache);

template <class T>
Forward<T> dense_forward(const Tensor<T>& input, const LayerParams<T>& params);
template <class T>
Gradients<T> dense_backward(const Tensor<T>& grad_out, const LayerCache<T>& cache,
                            const LayerParams<T>& params, bool want_input_grad = true);

template <class T>
Forward<T> relu_forward(const Tensor<T>& input);
template <class T>
Tensor<T> relu_backward(const Tensor<T>& grad_out, const LayerCache<T>& cache);

/// [b, ...] -> [b, prod(...)]
template <class T>
Forward<T> flatten_forward(const Tensor<T>& input);
template <class T>
Tensor<T> flatten_backward(const Tensor<T>& grad_out, const LayerCache<T>& cache);

/// Inverted dropout: in train mode each unit survives with probability 1-rate
/// and is scaled by 1/(1-rate); infer mode is the identity.
template <class T>
Forward<T> dropout_forward(const Tensor<T>& input, double rate, Mode mode, Rng& rng);
template <class T>
Tensor<T> dropout_backward(const Tensor<T>& grad_out, const LayerCache<T>& cache);

/// Numerically stable softmax of a rank-1 logit vector.
template <class T>
Tensor<T> softmax(const Tensor<T>& logits);

/// Row-wise softmax of [b, K] logits; rank-1 input is treated as one row.
template <class T>
Forward<T> softmax_forward(const Tensor<T>& logits);

/// Vector-Jacobian product of the row-wise softmax.
template <class T>
Tensor<T> softmax_backward(const Tensor<T>& grad_out, const LayerCache<T>& cache);

}  // namespace mtfer
