#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "mtfer/labels.hpp"
#include "mtfer/model.hpp"

namespace mtfer {

/// Per-head loss weights; defaults are emotion 2, age 4, race 1.5, gender 0.1.
struct LossWeights {
    double emotion = 2.0;
    double gender = 0.1;
    double race = 1.5;
    double age = 4.0;

    PerHead<double> per_head() const { return {emotion, gender, race, age}; }
    LossWeights scaled(double c) const { return {emotion * c, gender * c, race * c, age * c}; }

    /// Throws ConfigError on a negative or non-finite weight, or if all are zero.
    void validate() const;

    friend bool operator==(const LossWeights&, const LossWeights&) = default;
};

/// Which heads carry a label for one example.
using HeadMask = PerHead<bool>;

/// Class indices per head; an empty optional marks a missing label.
struct Labels {
    PerHead<std::optional<std::size_t>> classes;

    HeadMask mask() const {
        return {classes[0].has_value(), classes[1].has_value(), classes[2].has_value(), classes[3].has_value()};
    }

    friend bool operator==(const Labels&, const Labels&) = default;
};

inline constexpr double kProbabilityFloor = 1e-12;

/// -sum(target_i * log(max(probs_i, 1e-12))). Throws LabelError unless
/// `target` is one-hot and DimensionError on a length mismatch.
template <class T>
double cce(const Tensor<T>& probs, const Tensor<T>& target);

/// Same loss for a class index.
template <class T>
double cce_index(std::span<const T> probs, std::size_t target);

/// sum_h w_h * L_h, with heads that have no present example in `batch_masks`
/// contributing exactly 0. Throws ConfigError on a negative weight.
double weighted_total_loss(const PerHead<double>& head_losses, const LossWeights& weights,
                           std::span<const HeadMask> batch_masks);

/// sum_h w_h * L_h over all heads.
double weighted_total_loss(const PerHead<double>& head_losses, const LossWeights& weights);

struct Accuracy {
    double value = 0.0;
    std::size_t correct = 0;
    std::size_t present = 0;
    bool empty_mask = false;  // no example present; value is defined as 0
};

/// correct / present over mask-present examples. DimensionError on unequal lengths.
Accuracy accuracy(std::span<const std::size_t> predictions, std::span<const std::size_t> targets,
                  std::span<const bool> mask);

/// Masked per-head cross-entropy of one batch and its logit gradients.
template <class T>
struct BatchLoss {
    PerHead<double> head_loss{};       // mean over present examples, 0 when none
    PerHead<double> head_loss_sum{};   // sum over present examples
    PerHead<std::size_t> present{};
    PerHead<std::size_t> correct{};
    double total = 0.0;                // weighted_total_loss of head_loss
    PerHead<Tensor<T>> logit_grads;    // empty for heads with zero weight or no labels
};

/// Loss of softmax outputs `probs` against `labels` (one entry per batch row).
/// The logit gradient of the weighted total for head h is
/// w_h / n_h * (p - onehot) on present rows and 0 elsewhere.
template <class T>
BatchLoss<T> batch_loss(const HeadOutputs<T>& probs, std::span<const Labels> labels, const LossWeights& weights,
                        bool want_grads);

/// One-hot encoding of labels, one vector per head (empty for absent heads).
std::vector<std::vector<int>> one_hot(const Labels& labels);

}  // namespace mtfer
