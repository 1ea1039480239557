#include "mtfer/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace mtfer {

namespace {

[[noreturn]] void config_error(const std::string& field, const std::string& msg) {
    throw ConfigError("train." + field + ": " + msg);
}

}  // namespace

void TrainConfig::validate() const {
    if (!(std::isfinite(initial_lr) && initial_lr > 0.0)) config_error("initial_lr", "must be a positive number");
    if (batch_size == 0) config_error("batch_size", "must be >= 1");
    if (max_epochs == 0) config_error("max_epochs", "must be >= 1");
    loss_weights.validate();
    if (!(plateau.factor > 0.0 && plateau.factor < 1.0)) config_error("plateau.factor", "must be in (0, 1)");
    if (plateau.patience == 0) config_error("plateau.patience", "must be >= 1");
    if (!(plateau.min_lr >= 0.0) || !std::isfinite(plateau.min_lr)) config_error("plateau.min_lr", "must be >= 0");
    if (!(initial_lr > plateau.min_lr)) config_error("initial_lr", "must exceed plateau.min_lr");
    if (!(plateau.min_delta >= 0.0)) config_error("plateau.min_delta", "must be >= 0");
    if (early_stop.patience == 0) config_error("early_stop.patience", "must be >= 1");
    if (!(early_stop.min_delta >= 0.0)) config_error("early_stop.min_delta", "must be >= 0");
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) config_error("train_fraction", "must be in (0, 1)");
}

template <class T>
void adam_step(std::span<Tensor<T>* const> params, std::span<const Tensor<T>> grads, AdamState<T>& state, double lr) {
    if (params.size() != grads.size()) {
        throw DimensionError("adam_step: " + std::to_string(params.size()) + " parameters but " +
                             std::to_string(grads.size()) + " gradients");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i]->shape() != grads[i].shape()) {
            throw DimensionError("adam_step: parameter " + std::to_string(i) + " has shape " +
                                 shape_to_string(params[i]->shape()) + ", gradient " + shape_to_string(grads[i].shape()));
        }
    }
    if (state.m.empty()) {
        for (auto* p : params) {
            state.m.emplace_back(p->shape());
            state.v.emplace_back(p->shape());
        }
    } else if (state.m.size() != params.size()) {
        throw DimensionError("adam_step: optimizer state tracks a different parameter list");
    }
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(kAdamBeta1, t);
    const double c2 = 1.0 - std::pow(kAdamBeta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        T* p = params[i]->data();
        const T* g = grads[i].data();
        T* m = state.m[i].data();
        T* v = state.v[i].data();
        for (std::size_t k = 0, n = grads[i].size(); k < n; ++k) {
            const double gk = g[k];
            const double mk = kAdamBeta1 * m[k] + (1.0 - kAdamBeta1) * gk;
            const double vk = kAdamBeta2 * v[k] + (1.0 - kAdamBeta2) * gk * gk;
            m[k] = static_cast<T>(mk);
            v[k] = static_cast<T>(vk);
            p[k] = static_cast<T>(p[k] - lr * (mk / c1) / (std::sqrt(vk / c2) + kAdamEpsilon));
        }
    }
}

std::string_view stop_reason_name(StopReason r) {
    switch (r) {
        case StopReason::none: return "none";
        case StopReason::early_stop: return "early_stop";
        case StopReason::lr_floor: return "lr_floor";
        case StopReason::max_epochs: return "max_epochs";
    }
    return "none";
}

template <class T>
void reduce_on_plateau(CallbackState<T>& state, const PlateauConfig& cfg, double monitor) {
    if (monitor > state.plateau_best + cfg.min_delta) {
        state.plateau_best = monitor;
        state.plateau_wait = 0;
        return;
    }
    if (++state.plateau_wait < cfg.patience) return;
    const double next = state.initial_lr * std::pow(cfg.factor, static_cast<double>(state.reductions + 1));
    if (next < cfg.min_lr) {
        if (state.stop_reason == StopReason::none) state.stop_reason = StopReason::lr_floor;
        return;
    }
    state.current_lr = next;
    ++state.reductions;
    state.plateau_wait = 0;
}

template <class T>
void early_stopping(CallbackState<T>& state, const EarlyStopConfig& cfg, double monitor, std::size_t epoch,
                    const Model<T>& model) {
    if (monitor > state.best_metric) {
        state.best_metric = monitor;
        state.best_epoch = epoch;
        state.best_weights.clear();
        for (const auto* t : parameter_tensors(model)) state.best_weights.push_back(*t);
    }
    if (monitor > state.early_reference + cfg.min_delta) {
        state.early_reference = monitor;
        state.early_wait = 0;
        return;
    }
    if (++state.early_wait >= cfg.patience && state.stop_reason == StopReason::none) {
        state.stop_reason = StopReason::early_stop;
    }
}

template <class T>
void run_callbacks(CallbackState<T>& state, const TrainConfig& cfg, double monitor, std::size_t epoch,
                   const Model<T>& model) {
    reduce_on_plateau(state, cfg.plateau, monitor);
    early_stopping(state, cfg.early_stop, monitor, epoch, model);
}

template <class T>
bool restore_best(CallbackState<T>& state, Model<T>& model) {
    if (state.best_weights.empty()) return false;
    auto params = parameters(model);
    if (params.size() != state.best_weights.size()) throw UsageError("best-weight snapshot does not match the model");
    for (std::size_t i = 0; i < params.size(); ++i) *params[i].tensor = state.best_weights[i];
    return true;
}

namespace {

struct HeadAccumulator {
    PerHead<double> loss_sum{};
    PerHead<std::size_t> present{};
    PerHead<std::size_t> correct{};
    std::size_t examples = 0;

    template <class T>
    void add(const BatchLoss<T>& b, std::size_t n) {
        for (std::size_t h = 0; h < kHeadCount; ++h) {
            loss_sum[h] += b.head_loss_sum[h];
            present[h] += b.present[h];
            correct[h] += b.correct[h];
        }
        examples += n;
    }

    EvalTable table(const LossWeights& weights) const {
        EvalTable t;
        t.examples = examples;
        const auto w = weights.per_head();
        for (std::size_t h = 0; h < kHeadCount; ++h) {
            auto& m = t.heads[h];
            m.present = present[h];
            if (present[h] == 0) continue;
            const double n = static_cast<double>(present[h]);
            m.loss = loss_sum[h] / n;
            m.accuracy = static_cast<double>(correct[h]) / n;
            t.total_loss += w[h] * *m.loss;
        }
        return t;
    }
};

}  // namespace

template <class T>
EvalTable evaluate(const Model<T>& model, std::span<const LabeledExample> examples, const LossWeights& weights,
                   std::size_t batch_size) {
    if (examples.empty()) throw SizeError("evaluate needs at least one example");
    Rng unused(0);
    HeadAccumulator acc;
    for (const auto& idx : batches(examples.size(), batch_size, false, unused)) {
        const Tensor<T> x = batch_images<T>(examples, idx);
        const auto labels = batch_labels(examples, idx);
        const auto fwd = forward(model, x, Mode::infer, unused, false);
        acc.add(batch_loss(fwd.probs, std::span<const Labels>(labels), weights, false), idx.size());
    }
    return acc.table(weights);
}

template <class T>
LossAndGradient<T> loss_and_gradient(const Model<T>& model, const Tensor<T>& images, std::span<const Labels> labels,
                                     const LossWeights& weights, Mode mode, Rng& rng) {
    LossAndGradient<T> out;
    const auto fwd = forward(model, images, mode, rng, true);
    out.loss = batch_loss(fwd.probs, labels, weights, true);
    out.grads = backward(model, fwd, out.loss.logit_grads);
    return out;
}

template <class T>
TrainHistory train(Model<T>& model, const DatasetSplit& data, const TrainConfig& cfg, const TrainOptions& options) {
    cfg.validate();
    if (data.train.empty()) throw SizeError("training set is empty");
    if (data.validation.empty()) throw SizeError("validation set is empty");

    Rng base(cfg.seed);
    Rng shuffle_rng = base.fork();
    Rng dropout_rng = base.fork();
    auto state = CallbackState<T>::start(cfg.initial_lr);
    AdamState<T> adam;
    std::vector<Tensor<T>*> params;
    for (auto& r : parameters(model)) params.push_back(r.tensor);

    TrainHistory history;
    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        EpochRecord rec;
        rec.epoch = epoch;
        rec.lr = state.current_lr;
        HeadAccumulator acc;
        for (const auto& idx : batches(data.train.size(), cfg.batch_size, true, shuffle_rng)) {
            const Tensor<T> x = batch_images<T>(data.train, idx);
            const auto labels = batch_labels(data.train, idx);
            auto step = loss_and_gradient(model, x, std::span<const Labels>(labels), cfg.loss_weights, Mode::train,
                                          dropout_rng);
            adam_step<T>(params, step.grads, adam, rec.lr);
            acc.add(step.loss, idx.size());
        }
        rec.train = acc.table(cfg.loss_weights);
        rec.validation = evaluate(model, std::span<const LabeledExample>(data.validation), cfg.loss_weights,
                                  cfg.batch_size);
        const double monitor = rec.validation.heads[index(Head::emotion)].accuracy.value_or(0.0);
        run_callbacks(state, cfg, monitor, epoch, model);
        history.epochs.push_back(rec);

        if (options.log) {
            char line[256];
            std::snprintf(line, sizeof line,
                          "epoch %zu  lr %.3g  train_loss %.4f  val_loss %.4f  val_emotion_acc %.4f\n", epoch,
                          rec.lr, rec.train.total_loss, rec.validation.total_loss, monitor);
            *options.log << line << std::flush;
        }
        if (options.on_epoch_end && !options.on_epoch_end(rec) && state.stop_reason == StopReason::none) {
            state.stop_reason = StopReason::max_epochs;
        }
        if (state.stop_reason != StopReason::none) break;
    }
    if (state.stop_reason == StopReason::none) state.stop_reason = StopReason::max_epochs;
    history.stop_reason = state.stop_reason;
    history.best_epoch = state.best_epoch;
    history.best_metric = state.best_metric;
    if (cfg.early_stop.restore_best) history.restored = restore_best(state, model);
    return history;
}

std::string format_eval_table(const EvalTable& table) {
    static constexpr std::array<const char*, kHeadCount> labels{"emotion", "gender", "race/ethnicity", "age"};
    std::string out;
    char line[128];
    std::snprintf(line, sizeof line, "%-16s%-12s%-12s%s\n", "head", "accuracy", "loss", "examples");
    out += line;
    for (std::size_t h = 0; h < kHeadCount; ++h) {
        const auto& m = table.heads[h];
        char acc[32] = "N/A", loss[32] = "N/A";
        if (m.accuracy) std::snprintf(acc, sizeof acc, "%.4f", *m.accuracy);
        if (m.loss) std::snprintf(loss, sizeof loss, "%.4f", *m.loss);
        std::snprintf(line, sizeof line, "%-16s%-12s%-12s%zu\n", labels[h], acc, loss, m.present);
        out += line;
    }
    return out;
}

#define MTFER_INSTANTIATE(T)                                                                                       \
    template void adam_step<T>(std::span<Tensor<T>* const>, std::span<const Tensor<T>>, AdamState<T>&, double);   \
    template void reduce_on_plateau<T>(CallbackState<T>&, const PlateauConfig&, double);                          \
    template void early_stopping<T>(CallbackState<T>&, const EarlyStopConfig&, double, std::size_t,               \
                                    const Model<T>&);                                                             \
    template void run_callbacks<T>(CallbackState<T>&, const TrainConfig&, double, std::size_t, const Model<T>&);  \
    template bool restore_best<T>(CallbackState<T>&, Model<T>&);                                                  \
    template EvalTable evaluate<T>(const Model<T>&, std::span<const LabeledExample>, const LossWeights&,          \
                                   std::size_t);                                                                  \
    template LossAndGradient<T> loss_and_gradient<T>(const Model<T>&, const Tensor<T>&, std::span<const Labels>,  \
                                                     const LossWeights&, Mode, Rng&);                             \
    template TrainHistory train<T>(Model<T>&, const DatasetSplit&, const TrainConfig&, const TrainOptions&);

MTFER_INSTANTIATE(float)
MTFER_INSTANTIATE(double)

}  // namespace mtfer
