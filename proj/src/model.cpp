#include "mtfer/model.hpp"

#include <cstdint>
#include <string>

#include "mtfer/simd.hpp"

namespace mtfer {
namespace {

[[noreturn]] void config_error(const std::string& field, const std::string& what) {
    throw ConfigError("model." + field + ": " + what);
}

}  // namespace

void ModelConfig::validate() const {
    if (input_height == 0 || input_width == 0 || input_channels == 0) config_error("input", "dimensions must be positive");
    if (kernel_size == 0) config_error("kernel_size", "must be positive");
    if (pool_window == 0) config_error("pool_window", "must be positive");
    if (heads.size() != kHeadCount) {
        config_error("heads", "expected exactly 4 heads, got " + std::to_string(heads.size()));
    }
    for (std::size_t h = 0; h < kHeadCount; ++h) {
        if (heads[h].name != kHeadNames[h]) {
            config_error("heads[" + std::to_string(h) + "].name",
                         "expected '" + std::string(kHeadNames[h]) + "', got '" + heads[h].name + "'");
        }
        if (heads[h].classes != kHeadClassCounts[h]) {
            config_error("heads[" + std::to_string(h) + "].classes",
                         "head '" + heads[h].name + "' must have " + std::to_string(kHeadClassCounts[h]) +
                             " classes, got " + std::to_string(heads[h].classes));
        }
    }
    if (conv_blocks.empty()) config_error("conv_blocks", "at least one block is required");
    std::size_t h = input_height, w = input_width;
    for (std::size_t b = 0; b < conv_blocks.size(); ++b) {
        if (conv_blocks[b].filters == 0) config_error("conv_blocks[" + std::to_string(b) + "].filters", "must be positive");
        if (conv_blocks[b].convs == 0) config_error("conv_blocks[" + std::to_string(b) + "].convs", "must be positive");
        if (h < pool_window || w < pool_window) {
            config_error("conv_blocks", "spatial size " + std::to_string(h) + "x" + std::to_string(w) +
                                            " too small to pool at block " + std::to_string(b));
        }
        h /= pool_window;
        w /= pool_window;
    }
    for (std::size_t j = 0; j < dense_units.size(); ++j) {
        if (dense_units[j] == 0) config_error("dense_units[" + std::to_string(j) + "]", "must be positive");
    }
    if (dropout_schedule.size() != conv_blocks.size() + dense_units.size()) {
        config_error("dropout_schedule", "needs one rate per conv block and trunk dense layer (" +
                                             std::to_string(conv_blocks.size() + dense_units.size()) + "), got " +
                                             std::to_string(dropout_schedule.size()));
    }
    for (std::size_t i = 0; i < dropout_schedule.size(); ++i) {
        const double r = dropout_schedule[i];
        if (!(r >= 0.0 && r < 1.0)) {
            config_error("dropout_schedule[" + std::to_string(i) + "]", "must be in [0, 1), got " + std::to_string(r));
        }
    }
    if (init != "glorot_uniform") config_error("init", "unknown scheme '" + init + "' (supported: glorot_uniform)");
}

std::size_t expected_parameter_count(const ModelConfig& c) {
    c.validate();
    std::size_t total = 0;
    std::size_t channels = c.input_channels;
    std::size_t h = c.input_height, w = c.input_width;
    for (const auto& block : c.conv_blocks) {
        for (std::size_t i = 0; i < block.convs; ++i) {
            total += c.kernel_size * c.kernel_size * channels * block.filters + block.filters;
            channels = block.filters;
        }
        h /= c.pool_window;
        w /= c.pool_window;
    }
    std::size_t features = h * w * channels;
    for (auto units : c.dense_units) {
        total += features * units + units;
        features = units;
    }
    for (const auto& head : c.heads) total += features * head.classes + head.classes;
    return total;
}

template <class T>
std::size_t Model<T>::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : trunk) n += l.parameter_count();
    for (const auto& l : heads) n += l.parameter_count();
    return n;
}

template <class T>
template <class U>
Model<U> Model<T>::cast() const {
    auto convert = [](const LayerParams<T>& p) {
        LayerParams<U> q;
        q.kind = p.kind;
        q.hyper = p.hyper;
        if (!p.weights.empty()) q.weights = p.weights.template cast<U>();
        if (!p.bias.empty()) q.bias = p.bias.template cast<U>();
        return q;
    };
    Model<U> out;
    out.config = config;
    for (const auto& l : trunk) out.trunk.push_back(convert(l));
    for (std::size_t h = 0; h < kHeadCount; ++h) out.heads[h] = convert(heads[h]);
    return out;
}

template <class T>
std::vector<ParamRef<T>> parameters(Model<T>& model) {
    std::vector<ParamRef<T>> refs;
    for (std::size_t i = 0; i < model.trunk.size(); ++i) {
        auto& l = model.trunk[i];
        if (l.weights.empty()) continue;
        const std::string base = "trunk." + std::to_string(i) + "." + std::string(layer_kind_name(l.kind));
        refs.push_back({base + ".weights", &l.weights, -1});
        refs.push_back({base + ".bias", &l.bias, -1});
    }
    for (std::size_t h = 0; h < kHeadCount; ++h) {
        const std::string base = "head." + std::string(kHeadNames[h]);
        refs.push_back({base + ".weights", &model.heads[h].weights, static_cast<int>(h)});
        refs.push_back({base + ".bias", &model.heads[h].bias, static_cast<int>(h)});
    }
    return refs;
}

template <class T>
std::vector<const Tensor<T>*> parameter_tensors(const Model<T>& model) {
    std::vector<const Tensor<T>*> out;
    for (const auto& l : model.trunk) {
        if (l.weights.empty()) continue;
        out.push_back(&l.weights);
        out.push_back(&l.bias);
    }
    for (const auto& l : model.heads) {
        out.push_back(&l.weights);
        out.push_back(&l.bias);
    }
    return out;
}

template <class T>
std::vector<std::string> parameter_names(const Model<T>& model) {
    std::vector<std::string> names;
    for (auto& r : parameters(const_cast<Model<T>&>(model))) names.push_back(std::move(r.name));
    return names;
}

template <class T>
Model<T> build_model(const ModelConfig& config) {
    config.validate();
    Model<T> m;
    m.config = config;
    std::size_t channels = config.input_channels;
    std::size_t h = config.input_height, w = config.input_width;
    std::size_t drop = 0;
    auto dropout_layer = [&](double rate) {
        LayerParams<T> d;
        d.kind = LayerKind::dropout;
        d.hyper.rate = rate;
        return d;
    };
    for (const auto& block : config.conv_blocks) {
        for (std::size_t i = 0; i < block.convs; ++i) {
            m.trunk.push_back(make_conv2d<T>(config.kernel_size, channels, block.filters));
            LayerParams<T> relu;
            relu.kind = LayerKind::relu;
            m.trunk.push_back(relu);
            channels = block.filters;
        }
        LayerParams<T> pool;
        pool.kind = LayerKind::maxpool;
        pool.hyper.window = config.pool_window;
        m.trunk.push_back(pool);
        m.trunk.push_back(dropout_layer(config.dropout_schedule[drop++]));
        h /= config.pool_window;
        w /= config.pool_window;
    }
    LayerParams<T> flat;
    flat.kind = LayerKind::flatten;
    m.trunk.push_back(flat);
    std::size_t features = h * w * channels;
    for (auto units : config.dense_units) {
        m.trunk.push_back(make_dense<T>(features, units));
        LayerParams<T> relu;
        relu.kind = LayerKind::relu;
        m.trunk.push_back(relu);
        m.trunk.push_back(dropout_layer(config.dropout_schedule[drop++]));
        features = units;
    }
    for (std::size_t i = 0; i < kHeadCount; ++i) {
        m.heads[i] = make_dense<T>(features, config.heads[i].classes, LayerKind::softmax_head);
    }

    Rng rng(config.seed);
    for (auto& l : m.trunk) {
        if (!l.weights.empty()) init_glorot_uniform(l, rng);
    }
    for (auto& l : m.heads) init_glorot_uniform(l, rng);
    return m;
}

template <class T>
ModelForward<T> forward(const Model<T>& model, const Tensor<T>& batch, Mode mode, Rng& rng, bool record) {
    const auto& c = model.config;
    const Shape& s = batch.shape();
    if (s.size() != 4 || s[1] != c.input_height || s[2] != c.input_width || s[3] != c.input_channels) {
        throw DimensionError("model input must be [batch, " + std::to_string(c.input_height) + ", " +
                             std::to_string(c.input_width) + ", " + std::to_string(c.input_channels) + "], got " +
                             shape_to_string(s));
    }
    ModelForward<T> out;
    out.recorded = record;
    if (record) out.trunk_caches.reserve(model.trunk.size());

    Tensor<T> x = batch;
    for (const auto& layer : model.trunk) {
        Forward<T> f;
        switch (layer.kind) {
            case LayerKind::conv2d: f = conv2d_forward(x, layer); break;
            case LayerKind::relu: f = relu_forward(x); break;
            case LayerKind::maxpool: f = maxpool_forward(x, layer.hyper.window); break;
            case LayerKind::dropout: f = dropout_forward(x, layer.hyper.rate, mode, rng); break;
            case LayerKind::flatten: f = flatten_forward(x); break;
            case LayerKind::dense: f = dense_forward(x, layer); break;
            case LayerKind::softmax_head: throw UsageError("softmax_head inside the trunk");
        }
        x = std::move(f.output);
        if (record) out.trunk_caches.push_back(std::move(f.cache));
    }
    out.features = std::move(x);

    for (std::size_t h = 0; h < kHeadCount; ++h) {
        Forward<T> logits = dense_forward(out.features, model.heads[h]);
        logits.output.require_finite("head logits");
        out.probs[h] = softmax_forward(logits.output).output;
        if (record) out.head_caches[h] = std::move(logits.cache);
    }
    return out;
}

template <class T>
std::vector<Tensor<T>> backward(const Model<T>& model, const ModelForward<T>& fwd, const PerHead<Tensor<T>>& logit_grads) {
    if (!fwd.recorded || fwd.trunk_caches.size() != model.trunk.size()) {
        throw UsageError("model backward requires a forward pass recorded with caches");
    }
    // Gradient slots in parameters() order.
    std::vector<Tensor<T>> grads;
    std::vector<std::size_t> trunk_slot(model.trunk.size(), SIZE_MAX);
    for (std::size_t i = 0; i < model.trunk.size(); ++i) {
        const auto& l = model.trunk[i];
        if (l.weights.empty()) continue;
        trunk_slot[i] = grads.size();
        grads.emplace_back(l.weights.shape());
        grads.emplace_back(l.bias.shape());
    }
    const std::size_t head_base = grads.size();
    for (const auto& l : model.heads) {
        grads.emplace_back(l.weights.shape());
        grads.emplace_back(l.bias.shape());
    }

    Tensor<T> g(fwd.features.shape());
    bool any = false;
    for (std::size_t h = 0; h < kHeadCount; ++h) {
        if (logit_grads[h].empty()) continue;
        Gradients<T> hg = dense_backward(logit_grads[h], fwd.head_caches[h], model.heads[h]);
        grads[head_base + 2 * h] = std::move(hg.weights);
        grads[head_base + 2 * h + 1] = std::move(hg.bias);
        simd::axpy<T>(g.size(), T(1), hg.input.data(), g.data());
        any = true;
    }
    if (!any) return grads;

    for (std::size_t i = model.trunk.size(); i-- > 0;) {
        const auto& layer = model.trunk[i];
        const auto& cache = fwd.trunk_caches[i];
        switch (layer.kind) {
            case LayerKind::conv2d: {
                Gradients<T> lg = conv2d_backward(g, cache, layer, i != 0);
                grads[trunk_slot[i]] = std::move(lg.weights);
                grads[trunk_slot[i] + 1] = std::move(lg.bias);
                g = std::move(lg.input);
                break;
            }
            case LayerKind::dense: {
                Gradients<T> lg = dense_backward(g, cache, layer, i != 0);
                grads[trunk_slot[i]] = std::move(lg.weights);
                grads[trunk_slot[i] + 1] = std::move(lg.bias);
                g = std::move(lg.input);
                break;
            }
            case LayerKind::relu: g = relu_backward(g, cache); break;
            case LayerKind::maxpool: g = maxpool_backward(g, cache); break;
            case LayerKind::dropout: g = dropout_backward(g, cache); break;
            case LayerKind::flatten: g = flatten_backward(g, cache); break;
            case LayerKind::softmax_head: throw UsageError("softmax_head inside the trunk");
        }
    }
    return grads;
}

template <class T>
Prediction predict_from_probs(const HeadOutputs<T>& probs, std::size_t row) {
    Prediction p;
    for (std::size_t h = 0; h < kHeadCount; ++h) {
        const auto& t = probs[h];
        if (t.rank() != 2 || row >= t.dim(0)) throw DimensionError("predict: row out of range for head outputs");
        const std::size_t k = t.dim(1);
        const T* r = t.data() + row * k;
        std::size_t best = 0;
        for (std::size_t i = 1; i < k; ++i) {
            if (r[i] > r[best]) best = i;
        }
        p.classes[h] = best;
        p.confidence[h] = static_cast<double>(r[best]);
        const auto names = class_names(kHeads[h]);
        p.names[h] = best < names.size() ? std::string(names[best]) : std::to_string(best);
    }
    return p;
}

template <class T>
Prediction predict(const Model<T>& model, const Tensor<T>& image) {
    if (image.rank() != 3) throw DimensionError("predict expects one [h, w, c] image, got " + shape_to_string(image.shape()));
    Tensor<T> batch = image.reshaped({1, image.dim(0), image.dim(1), image.dim(2)});
    Rng unused(0);
    return predict_from_probs(forward(model, batch, Mode::infer, unused, false).probs, 0);
}

std::string prediction_labels(const Prediction& p) {
    std::string s;
    for (std::size_t h = 0; h < kHeadCount; ++h) {
        if (h) s += ", ";
        s += p.names[h];
    }
    return s;
}

#define MTFER_INSTANTIATE(T)                                                                                       \
    template struct Model<T>;                                                                                      \
    template std::vector<ParamRef<T>> parameters<T>(Model<T>&);                                                    \
    template std::vector<const Tensor<T>*> parameter_tensors<T>(const Model<T>&);                                  \
    template std::vector<std::string> parameter_names<T>(const Model<T>&);                                         \
    template Model<T> build_model<T>(const ModelConfig&);                                                          \
    template ModelForward<T> forward<T>(const Model<T>&, const Tensor<T>&, Mode, Rng&, bool);                      \
    template std::vector<Tensor<T>> backward<T>(const Model<T>&, const ModelForward<T>&, const PerHead<Tensor<T>>&); \
    template Prediction predict_from_probs<T>(const HeadOutputs<T>&, std::size_t);                                 \
    template Prediction predict<T>(const Model<T>&, const Tensor<T>&);

MTFER_INSTANTIATE(float)
MTFER_INSTANTIATE(double)
#undef MTFER_INSTANTIATE

template Model<double> Model<float>::cast<double>() const;
template Model<float> Model<double>::cast<float>() const;
template Model<float> Model<float>::cast<float>() const;
template Model<double> Model<double>::cast<double>() const;

}  // namespace mtfer
