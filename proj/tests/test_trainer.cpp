#include <cmath>

#include "doctest.h"
#include "mtfer/errors.hpp"
#include "mtfer/metrics_csv.hpp"
#include "mtfer/plot.hpp"
#include "mtfer/synthetic.hpp"
#include "mtfer/trainer.hpp"

using namespace mtfer;

namespace {

ModelConfig small_config(std::uint64_t seed = 1) {
    ModelConfig c;
    c.conv_blocks = {{4, 1}, {8, 1}};
    c.dense_units = {16};
    c.dropout_schedule = {0.2, 0.2, 0.2};
    c.seed = seed;
    return c;
}

TrainConfig quick_train(std::size_t epochs) {
    TrainConfig t;
    t.max_epochs = epochs;
    t.batch_size = 8;
    t.initial_lr = 1e-3;
    t.seed = 3;
    return t;
}

}  // namespace

TEST_CASE("adam with zero gradient leaves parameters unchanged") {
    Tensor<double> p({4}, {1, -2, 3, 0.5});
    const auto before = p;
    std::vector<Tensor<double>*> ps{&p};
    std::vector<Tensor<double>> gs{Tensor<double>({4})};
    AdamState<double> st;
    for (int i = 0; i < 3; ++i) adam_step<double>(ps, gs, st, 1e-3);
    CHECK(p == before);
    CHECK(st.step == 3);
}

TEST_CASE("adam first step moves each parameter by about lr against the gradient sign") {
    Tensor<double> p({3}, {0.0, 0.0, 0.0});
    std::vector<Tensor<double>*> ps{&p};
    std::vector<Tensor<double>> gs{Tensor<double>({3}, {0.3, -2.0, 1e-3})};
    AdamState<double> st;
    const double lr = 3e-4;
    adam_step<double>(ps, gs, st, lr);
    CHECK(std::abs(p[0] + lr) <= lr * 1e-3);
    CHECK(std::abs(p[1] - lr) <= lr * 1e-3);
    CHECK(std::abs(p[2] + lr) <= lr * 1e-3);
    std::vector<Tensor<double>> bad{Tensor<double>({2})};
    CHECK_THROWS_AS(adam_step<double>(ps, bad, st, lr), DimensionError);
}

TEST_CASE("plateau ladder and lr floor") {
    auto st = CallbackState<float>::start(3e-4);
    PlateauConfig cfg;
    std::vector<double> lrs;
    reduce_on_plateau(st, cfg, 0.5);
    for (int epoch = 0; epoch < 40 && st.stop_reason == StopReason::none; ++epoch) {
        reduce_on_plateau(st, cfg, 0.4);
        if (lrs.empty() || lrs.back() != st.current_lr) lrs.push_back(st.current_lr);
    }
    REQUIRE(lrs.size() == 4);
    const double want[] = {3e-4, 6e-5, 1.2e-5, 2.4e-6};
    for (std::size_t i = 0; i < 4; ++i) CHECK(lrs[i] == doctest::Approx(want[i]).epsilon(1e-12));
    CHECK(st.stop_reason == StopReason::lr_floor);
    CHECK(st.current_lr == doctest::Approx(2.4e-6).epsilon(1e-12));
    CHECK(st.reductions == 3);
}

TEST_CASE("plateau counter resets on improvement") {
    auto st = CallbackState<float>::start(3e-4);
    PlateauConfig cfg;
    for (double v : {0.5, 0.5, 0.5, 0.5, 0.5, 0.6, 0.6, 0.6, 0.6, 0.6}) reduce_on_plateau(st, cfg, v);
    CHECK(st.current_lr == 3e-4);
    reduce_on_plateau(st, cfg, 0.6);
    CHECK(st.current_lr == doctest::Approx(6e-5));
    // A gain of 5e-5 over the best is below min_delta: no improvement.
    auto st2 = CallbackState<float>::start(3e-4);
    reduce_on_plateau(st2, cfg, 0.5);
    for (int i = 0; i < 5; ++i) reduce_on_plateau(st2, cfg, 0.50005);
    CHECK(st2.current_lr == doctest::Approx(6e-5));
}

TEST_CASE("early stopping after patience epochs keeps the best snapshot") {
    auto m = build_model<float>(small_config());
    auto st = CallbackState<float>::start(3e-4);
    EarlyStopConfig cfg;
    std::vector<double> seq{0.50, 0.55, 0.54};
    for (int i = 0; i < 11; ++i) seq.push_back(0.53);
    std::size_t epoch = 0;
    for (double v : seq) {
        ++epoch;
        // Perturb the weights so every epoch's snapshot is distinguishable.
        parameters(m)[0].tensor->at(0, 0, 0, 0) = static_cast<float>(epoch);
        early_stopping(st, cfg, v, epoch, m);
        if (st.stop_reason != StopReason::none) break;
    }
    CHECK(st.stop_reason == StopReason::early_stop);
    CHECK(epoch == 14);
    CHECK(st.best_epoch == 2);
    CHECK(st.best_metric == 0.55);
    CHECK(restore_best(st, m));
    CHECK(parameters(m)[0].tensor->at(0, 0, 0, 0) == 2.0f);
}

TEST_CASE("a sub-min_delta gain is snapshotted but does not reset patience") {
    auto m = build_model<float>(small_config());
    auto st = CallbackState<float>::start(3e-4);
    EarlyStopConfig cfg;
    cfg.patience = 3;
    early_stopping(st, cfg, 0.5, 1, m);
    early_stopping(st, cfg, 0.50005, 2, m);
    CHECK(st.best_epoch == 2);
    CHECK(st.early_wait == 1);
    early_stopping(st, cfg, 0.5, 3, m);
    early_stopping(st, cfg, 0.5, 4, m);
    CHECK(st.stop_reason == StopReason::early_stop);
}

TEST_CASE("evaluate a uniform predictor") {
    auto m = build_model<float>(small_config());
    for (auto& h : m.heads) {
        h.weights.fill(0);
        h.bias.fill(0);
    }
    auto ex = make_synthetic(14, 1, SyntheticLabels::emotion_only);
    for (std::size_t i = 0; i < ex.size(); ++i) ex[i].labels.classes[0] = i % 7;
    const auto t = evaluate(m, std::span<const LabeledExample>(ex));
    CHECK(*t.heads[0].loss == doctest::Approx(std::log(7.0)).epsilon(1e-6));
    CHECK(*t.heads[0].accuracy == doctest::Approx(1.0 / 7));
    CHECK_FALSE(t.heads[1].accuracy.has_value());
    const std::string table = format_eval_table(t);
    CHECK(table.find("race/ethnicity  N/A") != std::string::npos);
    CHECK_THROWS_AS(evaluate(m, std::span<const LabeledExample>()), SizeError);
}

TEST_CASE("one step at lr 1e-5 lowers the loss of a single example") {
    for (std::uint64_t trial = 0; trial < 20; ++trial) {
        auto m = build_model<double>(small_config(100 + trial));
        const auto ex = make_synthetic(1, 500 + trial);
        const std::size_t idx[] = {0};
        const auto x = batch_images<double>(ex, idx);
        const auto labels = batch_labels(ex, idx);
        Rng rng(0);
        const auto before = loss_and_gradient(m, x, std::span<const Labels>(labels), LossWeights{}, Mode::infer, rng);
        std::vector<Tensor<double>*> ps;
        for (auto& r : parameters(m)) ps.push_back(r.tensor);
        AdamState<double> st;
        adam_step<double>(ps, before.grads, st, 1e-5);
        const auto after = forward(m, x, Mode::infer, rng, false);
        CHECK(batch_loss(after.probs, std::span<const Labels>(labels), LossWeights{}, false).total < before.loss.total);
    }
}

TEST_CASE("training on emotion-only data never touches the other heads") {
    auto m = build_model<float>(small_config());
    const auto before = m.heads;
    DatasetSplit d = split(make_synthetic(40, 2, SyntheticLabels::emotion_only), 0.9, 1);
    const auto h = train(m, d, quick_train(3));
    CHECK(h.epochs.size() == 3);
    CHECK_FALSE(m.heads[0].weights == before[0].weights);
    for (std::size_t i = 1; i < kHeadCount; ++i) {
        CHECK(m.heads[i].weights == before[i].weights);
        CHECK(m.heads[i].bias == before[i].bias);
    }
    CHECK_FALSE(h.epochs[0].validation.heads[2].loss.has_value());
}

TEST_CASE("history records the weighted total and a valid lr sequence") {
    auto m = build_model<float>(small_config());
    DatasetSplit d = split(make_synthetic(40, 4), 0.9, 1);
    auto cfg = quick_train(4);
    cfg.plateau.patience = 1;
    cfg.plateau.min_delta = 0.5;  // force reductions every epoch
    const auto h = train(m, d, cfg);
    double prev = cfg.initial_lr;
    for (const auto& r : h.epochs) {
        const auto& t = r.validation;
        const double want = 2 * *t.heads[0].loss + 0.1 * *t.heads[1].loss + 1.5 * *t.heads[2].loss + 4 * *t.heads[3].loss;
        CHECK(std::abs(t.total_loss - want) <= 1e-9);
        CHECK(r.lr <= prev);
        const double k = std::log(r.lr / cfg.initial_lr) / std::log(0.2);
        CHECK(std::abs(k - std::round(k)) < 1e-9);
        prev = r.lr;
    }
    CHECK(h.epochs.back().lr < cfg.initial_lr);
    CHECK(h.stop_reason != StopReason::none);
}

TEST_CASE("same seed, same history, in deterministic mode") {
    auto run = [] {
        auto m = build_model<float>(small_config(7));
        DatasetSplit d = split(make_synthetic(30, 5), 0.9, 2);
        const auto h = train(m, d, quick_train(3));
        return std::make_pair(format_metrics_csv(h), m);
    };
    const auto [csv1, m1] = run();
    const auto [csv2, m2] = run();
    CHECK(csv1 == csv2);
    const auto a = parameter_tensors(m1), b = parameter_tensors(m2);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(*a[i] == *b[i]);
}

TEST_CASE("train config validation") {
    TrainConfig t;
    CHECK_NOTHROW(t.validate());
    t.plateau.factor = 1.0;
    CHECK_THROWS_WITH_AS(t.validate(), doctest::Contains("train.plateau.factor"), ConfigError);
    TrainConfig u;
    u.initial_lr = 1e-7;
    CHECK_THROWS_AS(u.validate(), ConfigError);
    TrainConfig v;
    v.early_stop.patience = 0;
    CHECK_THROWS_AS(v.validate(), ConfigError);
    auto m = build_model<float>(small_config());
    DatasetSplit empty;
    CHECK_THROWS_AS(train(m, empty, TrainConfig{}), SizeError);
}

TEST_CASE("metrics csv columns, NA cells and parsing") {
    const auto cols = metrics_columns();
    CHECK(cols.size() == 20);
    CHECK(cols.front() == "epoch");
    CHECK(cols[2] == "train_loss_total");
    CHECK(cols.back() == "val_loss_age");
    auto m = build_model<float>(small_config());
    DatasetSplit d = split(make_synthetic(20, 2, SyntheticLabels::emotion_only), 0.9, 1);
    const auto h = train(m, d, quick_train(2));
    const std::string csv = format_metrics_csv(h);
    CHECK(csv.find(",NA") != std::string::npos);
    const auto table = parse_metrics_csv(csv);
    CHECK(table.rows.size() == 2);
    CHECK(table.series("epoch")[1] == 2.0);
    CHECK_FALSE(table.series("val_acc_gender")[0].has_value());
    CHECK_THROWS_WITH_AS(table.column("val_acc_mood"), doctest::Contains("val_acc_mood"), FormatError);
    CHECK_THROWS_AS(parse_metrics_csv(""), FormatError);
}

TEST_CASE("training curves svg") {
    TrainHistory h;
    for (std::size_t e = 1; e <= 10; ++e) {
        EpochRecord r;
        r.epoch = e;
        r.lr = 3e-4;
        for (auto* t : {&r.train, &r.validation}) {
            t->heads[0].accuracy = 0.1 * static_cast<double>(e) / 2;
            t->heads[0].loss = 2.0 / static_cast<double>(e);
        }
        h.epochs.push_back(r);
    }
    const std::string svg = render_training_svg(parse_metrics_csv(format_metrics_csv(h)));
    std::size_t polylines = 0;
    for (auto p = svg.find("<polyline"); p != std::string::npos; p = svg.find("<polyline", p + 1)) ++polylines;
    CHECK(polylines == 4);
    CHECK(svg.find("epoch") != std::string::npos);
    CHECK(svg.find("validation") != std::string::npos);
    CHECK(svg.find("</svg>") != std::string::npos);
    h.epochs.resize(1);
    const std::string one = render_training_svg(parse_metrics_csv(format_metrics_csv(h)));
    CHECK(one.find("<circle") != std::string::npos);
}
