#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "mtfer/labels.hpp"
#include "mtfer/layers.hpp"

namespace mtfer {

struct ConvBlockSpec {
    std::size_t filters = 32;
    std::size_t convs = 2;

    friend bool operator==(const ConvBlockSpec&, const ConvBlockSpec&) = default;
};

struct HeadSpec {
    std::string name;
    std::size_t classes = 0;

    friend bool operator==(const HeadSpec&, const HeadSpec&) = default;
};

/// Declarative architecture. Each conv block is `convs` x (conv k x k "same",
/// ReLU) followed by a max-pool and a dropout; each trunk dense layer is
/// followed by ReLU and a dropout. dropout_schedule lists the dropout rates
/// along depth: one per conv block, then one per trunk dense layer.
struct ModelConfig {
    std::size_t input_height = 50;
    std::size_t input_width = 50;
    std::size_t input_channels = 1;
    std::size_t kernel_size = 3;
    std::size_t pool_window = 2;
    std::vector<ConvBlockSpec> conv_blocks{{32, 2}, {64, 2}, {128, 2}};
    std::vector<std::size_t> dense_units{256};
    std::vector<double> dropout_schedule{0.6, 0.5, 0.4, 0.4};
    std::vector<HeadSpec> heads{{"emotion", 7}, {"gender", 3}, {"race", 3}, {"age", 5}};
    std::string init = "glorot_uniform";
    std::uint64_t seed = 0;

    /// Throws ConfigError naming the offending field.
    void validate() const;

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Shared trunk plus four softmax heads that all read the trunk's final
/// activation.
template <class T>
struct Model {
    ModelConfig config;
    std::vector<LayerParams<T>> trunk;
    PerHead<LayerParams<T>> heads;

    std::size_t parameter_count() const;

    template <class U>
    Model<U> cast() const;
};

/// Named view of one parameter tensor, in checkpoint manifest order: trunk
/// layers first (weights then bias), then heads in canonical order.
template <class T>
struct ParamRef {
    std::string name;
    Tensor<T>* tensor = nullptr;
    int head = -1;  // owning head index for head-exclusive parameters, else -1
};

template <class T>
std::vector<ParamRef<T>> parameters(Model<T>& model);

/// Read-only counterpart of parameters(): tensors and names in manifest order.
template <class T>
std::vector<const Tensor<T>*> parameter_tensors(const Model<T>& model);

template <class T>
std::vector<std::string> parameter_names(const Model<T>& model);

/// Closed-form parameter count of a config (no allocation).
std::size_t expected_parameter_count(const ModelConfig& config);

template <class T>
Model<T> build_model(const ModelConfig& config);

/// Per-head probability rows, one [batch, classes] tensor per head.
template <class T>
using HeadOutputs = PerHead<Tensor<T>>;

template <class T>
struct ModelForward {
    HeadOutputs<T> probs;
    Tensor<T> features;  // trunk output shared by every head, [batch, units]
    std::vector<LayerCache<T>> trunk_caches;
    PerHead<LayerCache<T>> head_caches;
    bool recorded = false;
};

/// Runs the network on a [batch, h, w, c] tensor. Dropout draws from `rng`
/// in train mode only. Caches for backward are kept when `record` is set.
template <class T>
ModelForward<T> forward(const Model<T>& model, const Tensor<T>& batch, Mode mode, Rng& rng, bool record);

template <class T>
ModelForward<T> forward(const Model<T>& model, const Tensor<T>& batch, Mode mode, Rng& rng) {
    return forward(model, batch, mode, rng, mode == Mode::train);
}

/// Back-propagates per-head logit gradients ([batch, classes] each; an empty
/// tensor means the head contributes nothing). Returns one gradient tensor
/// per entry of parameters(model), in the same order. Heads without a logit
/// gradient get all-zero parameter gradients.
template <class T>
std::vector<Tensor<T>> backward(const Model<T>& model, const ModelForward<T>& fwd,
                                const PerHead<Tensor<T>>& logit_grads);

struct Prediction {
    PerHead<std::size_t> classes{};
    PerHead<std::string> names;
    PerHead<double> confidence{};
};

/// Argmax per head (ties go to the lowest index) of row `row`.
template <class T>
Prediction predict_from_probs(const HeadOutputs<T>& probs, std::size_t row = 0);

/// Forward one preprocessed [h, w, c] image in infer mode and decode.
template <class T>
Prediction predict(const Model<T>& model, const Tensor<T>& image);

/// "surprise, male, Caucasian, 0-3"
std::string prediction_labels(const Prediction& p);

}  // namespace mtfer
