#include "mtfer/layers.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "mtfer/parallel.hpp"
#include "mtfer/simd.hpp"

namespace mtfer {
namespace {

struct ImageDims {
    std::size_t batch, height, width, channels;
    bool batched;
};

ImageDims image_dims(const Shape& s, const char* op) {
    if (s.size() == 4) return {s[0], s[1], s[2], s[3], true};
    if (s.size() == 3) return {1, s[0], s[1], s[2], false};
    throw DimensionError(std::string(op) + " expects [b,h,w,c] or [h,w,c], got " + shape_to_string(s));
}

Shape image_shape(const ImageDims& d, std::size_t h, std::size_t w, std::size_t c) {
    if (d.batched) return {d.batch, h, w, c};
    return {h, w, c};
}

void require_cache(bool filled, const char* op) {
    if (!filled) throw UsageError(std::string(op) + ": backward called without a forward cache");
}

void require_same_shape(const Shape& got, const Shape& want, const char* op) {
    if (got != want) {
        throw DimensionError(std::string(op) + ": gradient shape " + shape_to_string(got) +
                             " does not match forward output " + shape_to_string(want));
    }
}

std::size_t same_pad_before(std::size_t in, std::size_t kernel, std::size_t stride) {
    const std::size_t out = (in + stride - 1) / stride;
    const std::size_t needed = (out - 1) * stride + kernel;
    return needed > in ? (needed - in) / 2 : 0;
}

struct ConvGeometry {
    std::size_t k, stride, pad_top, pad_left, cin, cout;
    std::size_t h, w, oh, ow;
    std::size_t patch() const { return k * k * cin; }
};

template <class T>
ConvGeometry conv_geometry(const ImageDims& d, const LayerParams<T>& p) {
    if (p.kind != LayerKind::conv2d || p.weights.rank() != 4) {
        throw UsageError("conv2d called with non-conv parameters");
    }
    const auto& ws = p.weights.shape();
    const std::size_t k = ws[0];
    if (ws[1] != k) throw DimensionError("conv2d kernel must be square, got " + shape_to_string(ws));
    if (ws[2] != d.channels) {
        throw DimensionError("conv2d channel mismatch: input has " + std::to_string(d.channels) +
                             " channels, kernel " + shape_to_string(ws) + " expects " + std::to_string(ws[2]));
    }
    if (p.hyper.stride < 1) throw RangeError("conv2d stride must be >= 1");
    if (p.bias.size() != ws[3]) throw DimensionError("conv2d bias size does not match output channels");
    ConvGeometry g{};
    g.k = k;
    g.stride = p.hyper.stride;
    g.cin = ws[2];
    g.cout = ws[3];
    g.h = d.height;
    g.w = d.width;
    if (p.hyper.padding == Padding::valid && (d.height < k || d.width < k)) {
        throw DimensionError("conv2d kernel " + std::to_string(k) + " does not fit input " +
                             std::to_string(d.height) + "x" + std::to_string(d.width));
    }
    g.oh = conv_output_extent(d.height, k, g.stride, p.hyper.padding);
    g.ow = conv_output_extent(d.width, k, g.stride, p.hyper.padding);
    g.pad_top = p.hyper.padding == Padding::same ? same_pad_before(d.height, k, g.stride) : 0;
    g.pad_left = p.hyper.padding == Padding::same ? same_pad_before(d.width, k, g.stride) : 0;
    return g;
}

// col[(y*ow + x), (dy*k + dx)*cin + i] = input[y*s+dy-pt, x*s+dx-pl, i] or 0.
template <class T>
void im2col(const ConvGeometry& g, const T* in, T* col) {
    const std::size_t patch = g.patch();
    for (std::size_t y = 0; y < g.oh; ++y) {
        for (std::size_t x = 0; x < g.ow; ++x) {
            T* row = col + (y * g.ow + x) * patch;
            for (std::size_t dy = 0; dy < g.k; ++dy) {
                const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y * g.stride + dy) -
                                          static_cast<std::ptrdiff_t>(g.pad_top);
                for (std::size_t dx = 0; dx < g.k; ++dx) {
                    const std::ptrdiff_t sx = static_cast<std::ptrdiff_t>(x * g.stride + dx) -
                                              static_cast<std::ptrdiff_t>(g.pad_left);
                    T* dst = row + (dy * g.k + dx) * g.cin;
                    if (sy < 0 || sx < 0 || sy >= static_cast<std::ptrdiff_t>(g.h) ||
                        sx >= static_cast<std::ptrdiff_t>(g.w)) {
                        std::fill(dst, dst + g.cin, T(0));
                    } else {
                        const T* src = in + (static_cast<std::size_t>(sy) * g.w + static_cast<std::size_t>(sx)) * g.cin;
                        std::copy(src, src + g.cin, dst);
                    }
                }
            }
        }
    }
}

template <class T>
void col2im_add(const ConvGeometry& g, const T* col, T* in) {
    const std::size_t patch = g.patch();
    for (std::size_t y = 0; y < g.oh; ++y) {
        for (std::size_t x = 0; x < g.ow; ++x) {
            const T* row = col + (y * g.ow + x) * patch;
            for (std::size_t dy = 0; dy < g.k; ++dy) {
                const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y * g.stride + dy) -
                                          static_cast<std::ptrdiff_t>(g.pad_top);
                if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(g.h)) continue;
                for (std::size_t dx = 0; dx < g.k; ++dx) {
                    const std::ptrdiff_t sx = static_cast<std::ptrdiff_t>(x * g.stride + dx) -
                                              static_cast<std::ptrdiff_t>(g.pad_left);
                    if (sx < 0 || sx >= static_cast<std::ptrdiff_t>(g.w)) continue;
                    T* dst = in + (static_cast<std::size_t>(sy) * g.w + static_cast<std::size_t>(sx)) * g.cin;
                    const T* src = row + (dy * g.k + dx) * g.cin;
                    for (std::size_t i = 0; i < g.cin; ++i) dst[i] += src[i];
                }
            }
        }
    }
}

struct DenseDims {
    std::size_t batch, features;
    bool batched;
};

DenseDims dense_dims(const Shape& s, const char* op) {
    if (s.size() == 2) return {s[0], s[1], true};
    if (s.size() == 1) return {1, s[0], false};
    throw DimensionError(std::string(op) + " expects [b,n] or [n], got " + shape_to_string(s));
}

}  // namespace

std::string_view layer_kind_name(LayerKind kind) {
    switch (kind) {
        case LayerKind::conv2d: return "conv2d";
        case LayerKind::maxpool: return "maxpool";
        case LayerKind::dense: return "dense";
        case LayerKind::relu: return "relu";
        case LayerKind::dropout: return "dropout";
        case LayerKind::flatten: return "flatten";
        case LayerKind::softmax_head: return "softmax_head";
    }
    return "unknown";
}

std::size_t conv_output_extent(std::size_t in, std::size_t kernel, std::size_t stride, Padding padding) {
    if (stride < 1) throw RangeError("stride must be >= 1");
    if (padding == Padding::same) return (in + stride - 1) / stride;
    if (in < kernel) throw DimensionError("kernel larger than input under valid padding");
    return (in - kernel) / stride + 1;
}

template <class T>
LayerParams<T> make_conv2d(std::size_t kernel, std::size_t in_channels, std::size_t out_channels,
                           std::size_t stride, Padding padding) {
    LayerParams<T> p;
    p.kind = LayerKind::conv2d;
    p.weights = Tensor<T>({kernel, kernel, in_channels, out_channels});
    p.bias = Tensor<T>({out_channels});
    p.hyper.kernel = kernel;
    p.hyper.stride = stride;
    p.hyper.padding = padding;
    return p;
}

template <class T>
LayerParams<T> make_dense(std::size_t in_features, std::size_t out_features, LayerKind kind) {
    LayerParams<T> p;
    p.kind = kind;
    p.weights = Tensor<T>({in_features, out_features});
    p.bias = Tensor<T>({out_features});
    return p;
}

template <class T>
void init_glorot_uniform(LayerParams<T>& params, Rng& rng) {
    std::size_t fan_in = 0, fan_out = 0;
    const auto& s = params.weights.shape();
    if (s.size() == 4) {
        fan_in = s[0] * s[1] * s[2];
        fan_out = s[0] * s[1] * s[3];
    } else if (s.size() == 2) {
        fan_in = s[0];
        fan_out = s[1];
    } else {
        return;
    }
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    params.weights = rng_uniform<T>(rng, s, -limit, limit);
    params.bias.fill(T(0));
}

// ---------------------------------------------------------------- conv2d

template <class T>
Forward<T> conv2d_forward(const Tensor<T>& input, const LayerParams<T>& params) {
    const ImageDims d = image_dims(input.shape(), "conv2d_forward");
    const ConvGeometry g = conv_geometry(d, params);
    Tensor<T> out(image_shape(d, g.oh, g.ow, g.cout));

    const std::size_t in_stride = g.h * g.w * g.cin;
    const std::size_t out_stride = g.oh * g.ow * g.cout;
    const std::size_t pixels = g.oh * g.ow;
    parallel_for(d.batch, [&](std::size_t b0, std::size_t b1) {
        std::vector<T> col(pixels * g.patch());
        for (std::size_t e = b0; e < b1; ++e) {
            im2col(g, input.data() + e * in_stride, col.data());
            T* o = out.data() + e * out_stride;
            for (std::size_t px = 0; px < pixels; ++px) std::copy(params.bias.data(), params.bias.data() + g.cout, o + px * g.cout);
            simd::gemm_accumulate<T>(pixels, g.cout, g.patch(), col.data(), g.patch(), params.weights.data(), g.cout,
                                     o, g.cout);
        }
    });

    Forward<T> f{std::move(out), {}};
    f.cache.filled = true;
    f.cache.input = input;
    return f;
}

template <class T>
Gradients<T> conv2d_backward(const Tensor<T>& grad_out, const LayerCache<T>& cache, const LayerParams<T>& params,
                             bool want_input_grad) {
    require_cache(cache.filled, "conv2d_backward");
    const ImageDims d = image_dims(cache.input.shape(), "conv2d_backward");
    const ConvGeometry g = conv_geometry(d, params);
    require_same_shape(grad_out.shape(), image_shape(d, g.oh, g.ow, g.cout), "conv2d_backward");

    const std::size_t patch = g.patch();
    const std::size_t pixels = g.oh * g.ow;
    const std::size_t in_stride = g.h * g.w * g.cin;
    const std::size_t out_stride = pixels * g.cout;

    Gradients<T> grads;
    grads.weights = Tensor<T>(params.weights.shape());
    grads.bias = Tensor<T>(params.bias.shape());
    if (want_input_grad) grads.input = Tensor<T>(cache.input.shape());

    // W^T as [cout x patch] for the input gradient.
    std::vector<T> wt;
    if (want_input_grad) {
        wt.resize(g.cout * patch);
        simd::transpose<T>(patch, g.cout, params.weights.data(), g.cout, wt.data(), patch);
    }

    // Per-example weight gradients are reduced in example order, so the
    // result does not depend on how examples are spread over threads.
    const bool sequential = effective_threads() == 1 || d.batch == 1;
    const std::size_t slots = sequential ? 1 : d.batch;
    std::vector<T> per_example(slots * patch * g.cout);

    auto one_example = [&](std::size_t e, T* gw_e, std::vector<T>& col, std::vector<T>& colt, std::vector<T>& gcol) {
        const T* go = grad_out.data() + e * out_stride;
        im2col(g, cache.input.data() + e * in_stride, col.data());
        simd::transpose<T>(pixels, patch, col.data(), patch, colt.data(), pixels);
        std::fill(gw_e, gw_e + patch * g.cout, T(0));
        simd::gemm_accumulate<T>(patch, g.cout, pixels, colt.data(), pixels, go, g.cout, gw_e, g.cout);
        if (want_input_grad) {
            std::fill(gcol.begin(), gcol.end(), T(0));
            simd::gemm_accumulate<T>(pixels, patch, g.cout, go, g.cout, wt.data(), patch, gcol.data(), patch);
            col2im_add(g, gcol.data(), grads.input.data() + e * in_stride);
        }
    };

    if (sequential) {
        std::vector<T> col(pixels * patch), colt(pixels * patch), gcol(want_input_grad ? pixels * patch : 0);
        for (std::size_t e = 0; e < d.batch; ++e) {
            one_example(e, per_example.data(), col, colt, gcol);
            simd::axpy<T>(patch * g.cout, T(1), per_example.data(), grads.weights.data());
        }
    } else {
        parallel_for(d.batch, [&](std::size_t b0, std::size_t b1) {
            std::vector<T> col(pixels * patch), colt(pixels * patch), gcol(want_input_grad ? pixels * patch : 0);
            for (std::size_t e = b0; e < b1; ++e) one_example(e, per_example.data() + e * patch * g.cout, col, colt, gcol);
        });
        for (std::size_t e = 0; e < d.batch; ++e) {
            simd::axpy<T>(patch * g.cout, T(1), per_example.data() + e * patch * g.cout, grads.weights.data());
        }
    }

    T* gb = grads.bias.data();
    for (std::size_t e = 0; e < d.batch; ++e) {
        const T* go = grad_out.data() + e * out_stride;
        for (std::size_t px = 0; px < pixels; ++px) {
            for (std::size_t o = 0; o < g.cout; ++o) gb[o] += go[px * g.cout + o];
        }
    }
    return grads;
}

// ---------------------------------------------------------------- maxpool

template <class T>
Forward<T> maxpool_forward(const Tensor<T>& input, std::size_t window) {
    if (window < 1) throw RangeError("maxpool window must be >= 1");
    const ImageDims d = image_dims(input.shape(), "maxpool_forward");
    if (d.height < window || d.width < window) {
        throw DimensionError("maxpool window " + std::to_string(window) + " larger than input " +
                             shape_to_string(input.shape()));
    }
    const std::size_t oh = d.height / window, ow = d.width / window, c = d.channels;
    Tensor<T> out(image_shape(d, oh, ow, c));
    Forward<T> f;
    f.cache.argmax.resize(out.size());
    for (std::size_t e = 0; e < d.batch; ++e) {
        const std::size_t in_base = e * d.height * d.width * c;
        const std::size_t out_base = e * oh * ow * c;
        for (std::size_t y = 0; y < oh; ++y) {
            for (std::size_t x = 0; x < ow; ++x) {
                for (std::size_t ch = 0; ch < c; ++ch) {
                    // Row-major scan of the window; strict '>' keeps the first maximum.
                    std::size_t best = in_base + ((y * window) * d.width + x * window) * c + ch;
                    T best_v = input[best];
                    for (std::size_t dy = 0; dy < window; ++dy) {
                        for (std::size_t dx = 0; dx < window; ++dx) {
                            const std::size_t idx = in_base + ((y * window + dy) * d.width + x * window + dx) * c + ch;
                            if (input[idx] > best_v) {
                                best_v = input[idx];
                                best = idx;
                            }
                        }
                    }
                    const std::size_t o = out_base + (y * ow + x) * c + ch;
                    out[o] = best_v;
                    f.cache.argmax[o] = static_cast<std::uint32_t>(best);
                }
            }
        }
    }
    f.output = std::move(out);
    f.cache.filled = true;
    f.cache.input_shape = input.shape();
    return f;
}

template <class T>
Tensor<T> maxpool_backward(const Tensor<T>& grad_out, const LayerCache<T>& cache) {
    require_cache(cache.filled, "maxpool_backward");
    if (grad_out.size() != cache.argmax.size()) {
        throw DimensionError("maxpool_backward: gradient " + shape_to_string(grad_out.shape()) +
                             " does not match forward output size " + std::to_string(cache.argmax.size()));
    }
    Tensor<T> gin(cache.input_shape);
    for (std::size_t o = 0; o < grad_out.size(); ++o) gin[cache.argmax[o]] += grad_out[o];
    return gin;
}

// ---------------------------------------------------------------- dense

template <class T>
Forward<T> dense_forward(const Tensor<T>& input, const LayerParams<T>& params) {
    const DenseDims d = dense_dims(input.shape(), "dense_forward");
    if (params.weights.rank() != 2 || params.weights.dim(0) != d.features) {
        throw DimensionError("dense input " + shape_to_string(input.shape()) + " does not match weights " +
                             shape_to_string(params.weights.shape()));
    }
    const std::size_t n_out = params.weights.dim(1);
    if (params.bias.size() != n_out) throw DimensionError("dense bias size does not match output units");
    Tensor<T> out(d.batched ? Shape{d.batch, n_out} : Shape{n_out});
    for (std::size_t r = 0; r < d.batch; ++r) {
        std::copy(params.bias.data(), params.bias.data() + n_out, out.data() + r * n_out);
    }
    simd::gemm_accumulate<T>(d.batch, n_out, d.features, input.data(), d.features, params.weights.data(), n_out,
                             out.data(), n_out);
    Forward<T> f{std::move(out), {}};
    f.cache.filled = true;
    f.cache.input = input;
    return f;
}

template <class T>
Gradients<T> dense_backward(const Tensor<T>& grad_out, const LayerCache<T>& cache, const LayerParams<T>& params,
                            bool want_input_grad) {
    require_cache(cache.filled, "dense_backward");
    const DenseDims d = dense_dims(cache.input.shape(), "dense_backward");
    const std::size_t n_out = params.weights.dim(1);
    require_same_shape(grad_out.shape(), d.batched ? Shape{d.batch, n_out} : Shape{n_out}, "dense_backward");

    Gradients<T> grads;
    grads.weights = Tensor<T>(params.weights.shape());
    grads.bias = Tensor<T>(params.bias.shape());

    std::vector<T> xt(d.features * d.batch);
    simd::transpose<T>(d.batch, d.features, cache.input.data(), d.features, xt.data(), d.batch);
    simd::gemm_accumulate<T>(d.features, n_out, d.batch, xt.data(), d.batch, grad_out.data(), n_out,
                             grads.weights.data(), n_out);
    for (std::size_t r = 0; r < d.batch; ++r) {
        simd::axpy<T>(n_out, T(1), grad_out.data() + r * n_out, grads.bias.data());
    }
    if (want_input_grad) {
        grads.input = Tensor<T>(cache.input.shape());
        std::vector<T> wt(n_out * d.features);
        simd::transpose<T>(d.features, n_out, params.weights.data(), n_out, wt.data(), d.features);
        simd::gemm_accumulate<T>(d.batch, d.features, n_out, grad_out.data(), n_out, wt.data(), d.features,
                                 grads.input.data(), d.features);
    }
    return grads;
}

// ---------------------------------------------------------------- relu

template <class T>
Forward<T> relu_forward(const Tensor<T>& input) {
    Forward<T> f{Tensor<T>(input.shape()), {}};
    simd::relu<T>(input.size(), input.data(), f.output.data());
    f.cache.filled = true;
    f.cache.input = input;
    return f;
}

template <class T>
Tensor<T> relu_backward(const Tensor<T>& grad_out, const LayerCache<T>& cache) {
    require_cache(cache.filled, "relu_backward");
    require_same_shape(grad_out.shape(), cache.input.shape(), "relu_backward");
    Tensor<T> gin(grad_out.shape());
    for (std::size_t i = 0; i < gin.size(); ++i) gin[i] = cache.input[i] > T(0) ? grad_out[i] : T(0);
    return gin;
}

// ---------------------------------------------------------------- flatten

template <class T>
Forward<T> flatten_forward(const Tensor<T>& input) {
    if (input.rank() < 1) throw DimensionError("flatten of an empty tensor");
    const std::size_t b = input.dim(0);
    Forward<T> f{input.reshaped({b, input.size() / b}), {}};
    f.cache.filled = true;
    f.cache.input_shape = input.shape();
    return f;
}

template <class T>
Tensor<T> flatten_backward(const Tensor<T>& grad_out, const LayerCache<T>& cache) {
    require_cache(cache.filled, "flatten_backward");
    if (grad_out.size() != shape_size(cache.input_shape)) {
        throw DimensionError("flatten_backward: gradient " + shape_to_string(grad_out.shape()) +
                             " does not match input " + shape_to_string(cache.input_shape));
    }
    return grad_out.reshaped(cache.input_shape);
}

// ---------------------------------------------------------------- dropout

template <class T>
Forward<T> dropout_forward(const Tensor<T>& input, double rate, Mode mode, Rng& rng) {
    if (!(rate >= 0.0 && rate < 1.0)) throw RangeError("dropout rate must be in [0, 1), got " + std::to_string(rate));
    Forward<T> f{input, {}};
    f.cache.filled = true;
    if (mode == Mode::infer || rate == 0.0) return f;
    const T scale = static_cast<T>(1.0 / (1.0 - rate));
    f.cache.mask = Tensor<T>(input.shape());
    for (auto& m : f.cache.mask.values()) m = rng.uniform() >= rate ? scale : T(0);
    simd::mul<T>(input.size(), input.data(), f.cache.mask.data(), f.output.data());
    return f;
}

template <class T>
Tensor<T> dropout_backward(const Tensor<T>& grad_out, const LayerCache<T>& cache) {
    require_cache(cache.filled, "dropout_backward");
    if (cache.mask.empty()) return grad_out;
    require_same_shape(grad_out.shape(), cache.mask.shape(), "dropout_backward");
    Tensor<T> gin(grad_out.shape());
    simd::mul<T>(grad_out.size(), grad_out.data(), cache.mask.data(), gin.data());
    return gin;
}

// ---------------------------------------------------------------- softmax

template <class T>
Tensor<T> softmax(const Tensor<T>& logits) {
    if (logits.rank() != 1) throw DimensionError("softmax expects a vector, got " + shape_to_string(logits.shape()));
    return softmax_forward(logits).output;
}

template <class T>
Forward<T> softmax_forward(const Tensor<T>& logits) {
    const DenseDims d = dense_dims(logits.shape(), "softmax");
    logits.require_finite("softmax input");
    Tensor<T> out(logits.shape());
    const std::size_t k = d.features;
    for (std::size_t r = 0; r < d.batch; ++r) {
        const T* z = logits.data() + r * k;
        T* y = out.data() + r * k;
        T mx = z[0];
        for (std::size_t i = 1; i < k; ++i) mx = std::max(mx, z[i]);
        T sum = 0;
        for (std::size_t i = 0; i < k; ++i) {
            y[i] = std::exp(z[i] - mx);
            sum += y[i];
        }
        for (std::size_t i = 0; i < k; ++i) y[i] /= sum;
    }
    Forward<T> f{std::move(out), {}};
    f.cache.filled = true;
    f.cache.output = f.output;
    return f;
}

template <class T>
Tensor<T> softmax_backward(const Tensor<T>& grad_out, const LayerCache<T>& cache) {
    require_cache(cache.filled, "softmax_backward");
    require_same_shape(grad_out.shape(), cache.output.shape(), "softmax_backward");
    const DenseDims d = dense_dims(grad_out.shape(), "softmax_backward");
    Tensor<T> gin(grad_out.shape());
    for (std::size_t r = 0; r < d.batch; ++r) {
        const T* y = cache.output.data() + r * d.features;
        const T* g = grad_out.data() + r * d.features;
        T dot = 0;
        for (std::size_t i = 0; i < d.features; ++i) dot += g[i] * y[i];
        for (std::size_t i = 0; i < d.features; ++i) gin[r * d.features + i] = y[i] * (g[i] - dot);
    }
    return gin;
}

#define MTFER_INSTANTIATE(T)                                                                                   \
    template LayerParams<T> make_conv2d<T>(std::size_t, std::size_t, std::size_t, std::size_t, Padding);      \
    template LayerParams<T> make_dense<T>(std::size_t, std::size_t, LayerKind);                               \
    template void init_glorot_uniform<T>(LayerParams<T>&, Rng&);                                              \
    template Forward<T> conv2d_forward<T>(const Tensor<T>&, const LayerParams<T>&);                           \
    template Gradients<T> conv2d_backward<T>(const Tensor<T>&, const LayerCache<T>&, const LayerParams<T>&,   \
                                             bool);                                                           \
    template Forward<T> maxpool_forward<T>(const Tensor<T>&, std::size_t);                                    \
    template Tensor<T> maxpool_backward<T>(const Tensor<T>&, const LayerCache<T>&);                           \
    template Forward<T> dense_forward<T>(const Tensor<T>&, const LayerParams<T>&);                            \
    template Gradients<T> dense_backward<T>(const Tensor<T>&, const LayerCache<T>&, const LayerParams<T>&,    \
                                            bool);                                                            \
    template Forward<T> relu_forward<T>(const Tensor<T>&);                                                    \
    template Tensor<T> relu_backward<T>(const Tensor<T>&, const LayerCache<T>&);                              \
    template Forward<T> flatten_forward<T>(const Tensor<T>&);                                                 \
    template Tensor<T> flatten_backward<T>(const Tensor<T>&, const LayerCache<T>&);                           \
    template Forward<T> dropout_forward<T>(const Tensor<T>&, double, Mode, Rng&);                             \
    template Tensor<T> dropout_backward<T>(const Tensor<T>&, const LayerCache<T>&);                           \
    template Tensor<T> softmax<T>(const Tensor<T>&);                                                          \
    template Forward<T> softmax_forward<T>(const Tensor<T>&);                                                 \
    template Tensor<T> softmax_backward<T>(const Tensor<T>&, const LayerCache<T>&);

MTFER_INSTANTIATE(float)
MTFER_INSTANTIATE(double)
#undef MTFER_INSTANTIATE

}  // namespace mtfer
