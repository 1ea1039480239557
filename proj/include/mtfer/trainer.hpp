#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mtfer/data.hpp"
#include "mtfer/losses.hpp"
#include "mtfer/model.hpp"

namespace mtfer {

struct PlateauConfig {
    std::size_t patience = 5;
    double factor = 0.2;
    double min_lr = 1e-6;
    double min_delta = 1e-4;

    friend bool operator==(const PlateauConfig&, const PlateauConfig&) = default;
};

struct EarlyStopConfig {
    std::size_t patience = 12;
    double min_delta = 1e-4;
    bool restore_best = true;

    friend bool operator==(const EarlyStopConfig&, const EarlyStopConfig&) = default;
};

/// Both callbacks monitor validation emotion accuracy.
struct TrainConfig {
    double initial_lr = 3e-4;
    std::size_t batch_size = 32;
    std::size_t max_epochs = 100;
    LossWeights loss_weights;
    PlateauConfig plateau;
    EarlyStopConfig early_stop;
    std::uint64_t seed = 0;
    double train_fraction = 0.9;

    /// Throws ConfigError naming the field ("train.plateau.factor: ...").
    void validate() const;

    friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEpsilon = 1e-7;

template <class T>
struct AdamState {
    std::vector<Tensor<T>> m;
    std::vector<Tensor<T>> v;
    std::uint64_t step = 0;
};

/// One Adam update with bias correction:
///   m = b1 m + (1-b1) g,  v = b2 v + (1-b2) g^2,
///   p -= lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps).
/// Moments are created lazily on the first call. Throws DimensionError when
/// a gradient shape differs from its parameter.
template <class T>
void adam_step(std::span<Tensor<T>* const> params, std::span<const Tensor<T>> grads, AdamState<T>& state, double lr);

enum class StopReason { none, early_stop, lr_floor, max_epochs };

std::string_view stop_reason_name(StopReason r);

/// State of the plateau and early-stopping callbacks.
template <class T>
struct CallbackState {
    double initial_lr = 3e-4;
    double current_lr = 3e-4;
    std::size_t reductions = 0;  // current_lr == initial_lr * factor^reductions

    double plateau_best = -std::numeric_limits<double>::infinity();
    std::size_t plateau_wait = 0;

    // Highest monitor value seen and the weights that produced it.
    double best_metric = -std::numeric_limits<double>::infinity();
    std::size_t best_epoch = 0;
    std::vector<Tensor<T>> best_weights;
    // Reference the early-stopping patience is measured against; only moves
    // on improvements larger than min_delta.
    double early_reference = -std::numeric_limits<double>::infinity();
    std::size_t early_wait = 0;

    StopReason stop_reason = StopReason::none;

    static CallbackState start(double lr) {
        CallbackState s;
        s.initial_lr = s.current_lr = lr;
        return s;
    }
};

/// Improvement is monitor > best + min_delta. After `patience` consecutive
/// non-improving epochs lr becomes initial_lr * factor^(k+1); if that would
/// fall below min_lr the lr is kept and stop_reason becomes lr_floor.
template <class T>
void reduce_on_plateau(CallbackState<T>& state, const PlateauConfig& cfg, double monitor);

/// Snapshots `weights` whenever monitor exceeds every earlier value; the
/// patience counter resets only on improvements larger than min_delta.
template <class T>
void early_stopping(CallbackState<T>& state, const EarlyStopConfig& cfg, double monitor, std::size_t epoch,
                    const Model<T>& model);

/// Plateau first, then early stopping.
template <class T>
void run_callbacks(CallbackState<T>& state, const TrainConfig& cfg, double monitor, std::size_t epoch,
                   const Model<T>& model);

/// Writes the snapshot back into the model; no-op without a snapshot.
template <class T>
bool restore_best(CallbackState<T>& state, Model<T>& model);

/// Per-head loss/accuracy; heads without any labelled example are not
/// applicable and hold no value.
struct HeadMetrics {
    std::optional<double> loss;
    std::optional<double> accuracy;
    std::size_t present = 0;
};

struct EvalTable {
    PerHead<HeadMetrics> heads;
    double total_loss = 0.0;  // sum of w_h * loss_h over applicable heads
    std::size_t examples = 0;
};

/// Infer-mode pass in fixed batches of `batch_size`. Throws SizeError on an
/// empty set.
template <class T>
EvalTable evaluate(const Model<T>& model, std::span<const LabeledExample> examples, const LossWeights& weights = {},
                   std::size_t batch_size = 32);

struct EpochRecord {
    std::size_t epoch = 0;  // 1-based
    double lr = 0.0;        // learning rate used during the epoch
    EvalTable train;        // running means over the epoch's train-mode batches
    EvalTable validation;
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;
    StopReason stop_reason = StopReason::none;
    std::size_t best_epoch = 0;
    double best_metric = 0.0;
    bool restored = false;
};

struct TrainOptions {
    /// Called after each epoch's callbacks; returning false stops training
    /// with stop_reason max_epochs semantics (best weights still restored).
    std::function<bool(const EpochRecord&)> on_epoch_end;
    std::ostream* log = nullptr;
};

/// Trains `model` in place. Throws SizeError on an empty train or
/// validation set.
template <class T>
TrainHistory train(Model<T>& model, const DatasetSplit& data, const TrainConfig& cfg, const TrainOptions& options = {});

/// Weighted total loss of a batch and its gradient in parameters() order.
template <class T>
struct LossAndGradient {
    BatchLoss<T> loss;
    std::vector<Tensor<T>> grads;
};

template <class T>
LossAndGradient<T> loss_and_gradient(const Model<T>& model, const Tensor<T>& images, std::span<const Labels> labels,
                                     const LossWeights& weights, Mode mode, Rng& rng);

/// Human-readable evaluation table: one row per head (emotion, gender,
/// race/ethnicity, age) with accuracy and loss, "N/A" where not applicable.
std::string format_eval_table(const EvalTable& table);

}  // namespace mtfer
