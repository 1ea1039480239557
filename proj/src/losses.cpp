#include "mtfer/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mtfer {

void LossWeights::validate() const {
    const auto w = per_head();
    bool any = false;
    for (std::size_t h = 0; h < kHeadCount; ++h) {
        if (!std::isfinite(w[h]) || w[h] < 0.0) {
            throw ConfigError("train.loss_weights." + std::string(kHeadNames[h]) + ": must be a finite value >= 0, got " +
                              std::to_string(w[h]));
        }
        any = any || w[h] > 0.0;
    }
    if (!any) throw ConfigError("train.loss_weights: at least one weight must be positive");
}

template <class T>
double cce_index(std::span<const T> probs, std::size_t target) {
    if (target >= probs.size()) {
        throw LabelError("class index " + std::to_string(target) + " out of range for " + std::to_string(probs.size()) +
                         " classes");
    }
    const double p = std::max(static_cast<double>(probs[target]), kProbabilityFloor);
    return -std::log(p);
}

template <class T>
double cce(const Tensor<T>& probs, const Tensor<T>& target) {
    if (probs.rank() != 1 || probs.shape() != target.shape()) {
        throw DimensionError("cce expects equal-length vectors, got " + shape_to_string(probs.shape()) + " and " +
                             shape_to_string(target.shape()));
    }
    std::size_t hot = probs.size();
    for (std::size_t i = 0; i < target.size(); ++i) {
        if (target[i] == T(1) && hot == probs.size()) {
            hot = i;
        } else if (target[i] != T(0)) {
            throw LabelError("cce target is not one-hot");
        }
    }
    if (hot == probs.size()) throw LabelError("cce target is not one-hot");
    return cce_index<T>(probs.values(), hot);
}

double weighted_total_loss(const PerHead<double>& head_losses, const LossWeights& weights) {
    weights.validate();
    const auto w = weights.per_head();
    double total = 0.0;
    for (std::size_t h = 0; h < kHeadCount; ++h) total += w[h] * head_losses[h];
    return total;
}

double weighted_total_loss(const PerHead<double>& head_losses, const LossWeights& weights,
                           std::span<const HeadMask> batch_masks) {
    weights.validate();
    const auto w = weights.per_head();
    double total = 0.0;
    for (std::size_t h = 0; h < kHeadCount; ++h) {
        const bool present = std::any_of(batch_masks.begin(), batch_masks.end(), [h](const HeadMask& m) { return m[h]; });
        if (present) total += w[h] * head_losses[h];
    }
    return total;
}

Accuracy accuracy(std::span<const std::size_t> predictions, std::span<const std::size_t> targets,
                  std::span<const bool> mask) {
    if (predictions.size() != targets.size() || predictions.size() != mask.size()) {
        throw DimensionError("accuracy: predictions (" + std::to_string(predictions.size()) + "), targets (" +
                             std::to_string(targets.size()) + ") and mask (" + std::to_string(mask.size()) +
                             ") lengths differ");
    }
    Accuracy a;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        if (!mask[i]) continue;
        ++a.present;
        if (predictions[i] == targets[i]) ++a.correct;
    }
    if (a.present == 0) {
        a.empty_mask = true;
        return a;
    }
    a.value = static_cast<double>(a.correct) / static_cast<double>(a.present);
    return a;
}

template <class T>
BatchLoss<T> batch_loss(const HeadOutputs<T>& probs, std::span<const Labels> labels, const LossWeights& weights,
                        bool want_grads) {
    weights.validate();
    const auto w = weights.per_head();
    BatchLoss<T> out;
    for (std::size_t h = 0; h < kHeadCount; ++h) {
        const Tensor<T>& p = probs[h];
        if (p.rank() != 2 || p.dim(0) != labels.size()) {
            throw DimensionError("batch_loss: head output " + shape_to_string(p.shape()) + " does not match " +
                                 std::to_string(labels.size()) + " labels");
        }
        const std::size_t k = p.dim(1);
        for (std::size_t r = 0; r < labels.size(); ++r) {
            const auto& c = labels[r].classes[h];
            if (!c) continue;
            const std::span<const T> row(p.data() + r * k, k);
            out.head_loss_sum[h] += cce_index<T>(row, *c);
            ++out.present[h];
            std::size_t best = 0;
            for (std::size_t i = 1; i < k; ++i) {
                if (row[i] > row[best]) best = i;
            }
            if (best == *c) ++out.correct[h];
        }
        if (out.present[h] > 0) out.head_loss[h] = out.head_loss_sum[h] / static_cast<double>(out.present[h]);

        if (!want_grads || w[h] == 0.0 || out.present[h] == 0) continue;
        const T scale = static_cast<T>(w[h] / static_cast<double>(out.present[h]));
        Tensor<T> g(p.shape());
        for (std::size_t r = 0; r < labels.size(); ++r) {
            const auto& c = labels[r].classes[h];
            if (!c) continue;
            for (std::size_t i = 0; i < k; ++i) {
                const T y = i == *c ? T(1) : T(0);
                g[r * k + i] = scale * (p[r * k + i] - y);
            }
        }
        out.logit_grads[h] = std::move(g);
    }
    for (std::size_t h = 0; h < kHeadCount; ++h) out.total += w[h] * out.head_loss[h];
    return out;
}

std::vector<std::vector<int>> one_hot(const Labels& labels) {
    std::vector<std::vector<int>> out(kHeadCount);
    for (std::size_t h = 0; h < kHeadCount; ++h) {
        if (!labels.classes[h]) continue;
        out[h].assign(kHeadClassCounts[h], 0);
        out[h].at(*labels.classes[h]) = 1;
    }
    return out;
}

#define MTFER_INSTANTIATE(T)                                                                                  \
    template double cce<T>(const Tensor<T>&, const Tensor<T>&);                                               \
    template double cce_index<T>(std::span<const T>, std::size_t);                                            \
    template BatchLoss<T> batch_loss<T>(const HeadOutputs<T>&, std::span<const Labels>, const LossWeights&, bool);

MTFER_INSTANTIATE(float)
MTFER_INSTANTIATE(double)
#undef MTFER_INSTANTIATE

}  // namespace mtfer
