// Acceptance suite: one PASS/FAIL line per criterion. Criterion 1 is a
// statement and criterion 13 is reported but does not affect the exit code.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "mtfer/checkpoint.hpp"
#include "mtfer/errors.hpp"
#include "mtfer/metrics_csv.hpp"
#include "mtfer/parallel.hpp"
#include "mtfer/preprocess.hpp"
#include "mtfer/synthetic.hpp"
#include "mtfer/trainer.hpp"
#include "oracles.hpp"

using namespace mtfer;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok && pass) {
            pass = false;
            detail = what;
        }
    }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

ModelConfig compact_config(std::uint64_t seed) {
    ModelConfig c;
    c.conv_blocks = {{8, 1}, {16, 1}};
    c.dense_units = {32};
    c.dropout_schedule = {0.2, 0.2, 0.2};
    c.seed = seed;
    return c;
}

Tensor<double> away_from_zero(Rng& rng, const Shape& s) {
    Tensor<double> t(s);
    for (auto& v : t.values()) {
        const double mag = rng.uniform(0.05, 1.0);
        v = rng.uniform() < 0.5 ? -mag : mag;
    }
    return t;
}

Outcome gradients() {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    const double eps = 1e-5, tol = 1e-4;
    double worst = 0;
    Rng rng(2024);
    auto check = [&](const Tensor<double>& analytic, Tensor<double>& x, const std::function<double()>& f) {
        worst = std::max(worst, oracle::relative_error(analytic, oracle::numeric_gradient(x, f, eps)));
    };
    for (int trial = 0; trial < 20; ++trial) {
        {
            const std::size_t k = 1 + 2 * rng.below(2), cin = 1 + rng.below(3), cout = 1 + rng.below(3);
            const std::size_t stride = 1 + rng.below(2);
            auto p = make_conv2d<double>(k, cin, cout, stride, Padding::same);
            p.weights = rng_uniform<double>(rng, p.weights.shape(), -1, 1);
            p.bias = rng_uniform<double>(rng, p.bias.shape(), -1, 1);
            auto x = rng_uniform<double>(rng, {1 + rng.below(2), 3 + rng.below(4), 3 + rng.below(4), cin}, -1, 1);
            const auto fwd = conv2d_forward(x, p);
            const auto r = rng_uniform<double>(rng, fwd.output.shape(), -1, 1);
            const auto g = conv2d_backward(r, fwd.cache, p);
            auto f = [&] { return oracle::project(conv2d_forward(x, p).output, r); };
            check(g.weights, p.weights, f);
            check(g.bias, p.bias, f);
            check(g.input, x, f);
        }
        {
            const std::size_t in = 1 + rng.below(9), out = 1 + rng.below(7);
            auto p = make_dense<double>(in, out);
            p.weights = rng_uniform<double>(rng, p.weights.shape(), -1, 1);
            p.bias = rng_uniform<double>(rng, p.bias.shape(), -1, 1);
            auto x = rng_uniform<double>(rng, {1 + rng.below(4), in}, -1, 1);
            const auto fwd = dense_forward(x, p);
            const auto r = rng_uniform<double>(rng, fwd.output.shape(), -1, 1);
            const auto g = dense_backward(r, fwd.cache, p);
            auto f = [&] { return oracle::project(dense_forward(x, p).output, r); };
            check(g.weights, p.weights, f);
            check(g.bias, p.bias, f);
            check(g.input, x, f);
        }
        {
            // Distinct values so no pooling window has a tie near the stencil.
            const std::size_t win = 2, c = 1 + rng.below(2), h = 2 * (1 + rng.below(3)), w = 2 * (1 + rng.below(3));
            Tensor<double> x({1, h, w, c});
            std::vector<std::size_t> order(x.size());
            for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
            rng.shuffle(order.begin(), order.end());
            for (std::size_t i = 0; i < order.size(); ++i) x[order[i]] = static_cast<double>(i) * 1e-2;
            const auto fwd = maxpool_forward(x, win);
            const auto r = rng_uniform<double>(rng, fwd.output.shape(), -1, 1);
            check(maxpool_backward(r, fwd.cache), x, [&] { return oracle::project(maxpool_forward(x, win).output, r); });
        }
        {
            auto x = away_from_zero(rng, {2, 3, 3, 2});
            const auto fwd = relu_forward(x);
            const auto r = rng_uniform<double>(rng, x.shape(), -1, 1);
            check(relu_backward(r, fwd.cache), x, [&] { return oracle::project(relu_forward(x).output, r); });
            const auto ff = flatten_forward(x);
            const auto rf = rng_uniform<double>(rng, ff.output.shape(), -1, 1);
            check(flatten_backward(rf, ff.cache), x, [&] { return oracle::project(flatten_forward(x).output, rf); });
        }
        {
            const double rate = rng.uniform(0.1, 0.7);
            const std::uint64_t seed = rng.next_u64();
            auto x = rng_uniform<double>(rng, {2, 10}, -1, 1);
            Rng d(seed);
            const auto fwd = dropout_forward(x, rate, Mode::train, d);
            const auto r = rng_uniform<double>(rng, x.shape(), -1, 1);
            check(dropout_backward(r, fwd.cache), x, [&] {
                Rng again(seed);
                return oracle::project(dropout_forward(x, rate, Mode::train, again).output, r);
            });
        }
        {
            auto z = rng_uniform<double>(rng, {1 + rng.below(4), 2 + rng.below(6)}, -3, 3);
            const auto fwd = softmax_forward(z);
            const auto r = rng_uniform<double>(rng, fwd.output.shape(), -1, 1);
            check(softmax_backward(r, fwd.cache), z, [&] { return oracle::project(softmax_forward(z).output, r); });
        }
    }
    const double secs = seconds_since(t0);
    o.require(worst <= tol, fmt("worst relative error %.3g", worst));
    o.require(secs < 60, fmt("took %.1f s", secs));
    if (o.pass) o.detail = fmt("20 configs x 7 layer kinds, worst relative error %.2g, %.2f s", worst, secs);
    return o;
}

Outcome oracle_equivalence() {
    Outcome o;
    Rng rng(77);
    double worst = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t k = 1 + rng.below(4), cin = 1 + rng.below(4), cout = 1 + rng.below(4);
        const std::size_t stride = 1 + rng.below(2), n = 1 + rng.below(3);
        const bool same = rng.below(2) == 0;
        auto p = make_conv2d<double>(k, cin, cout, stride, same ? Padding::same : Padding::valid);
        p.weights = rng_uniform<double>(rng, p.weights.shape(), -1, 1);
        p.bias = rng_uniform<double>(rng, p.bias.shape(), -1, 1);
        const auto x = rng_uniform<double>(rng, {n, k + rng.below(6), k + rng.below(6), cin}, -1, 1);
        worst = std::max(worst, max_abs_diff(conv2d_forward(x, p).output, oracle::conv2d(x, p.weights, p.bias, stride, same)));

        const std::size_t win = 2 + rng.below(2);
        const auto px = rng_uniform<double>(rng, {n, win * (1 + rng.below(3)), win * (1 + rng.below(3)), cin}, -1, 1);
        worst = std::max(worst, max_abs_diff(maxpool_forward(px, win).output, oracle::maxpool(px, win)));

        auto d = make_dense<double>(1 + rng.below(20), 1 + rng.below(10));
        d.weights = rng_uniform<double>(rng, d.weights.shape(), -1, 1);
        d.bias = rng_uniform<double>(rng, d.bias.shape(), -1, 1);
        const auto dx = rng_uniform<double>(rng, {n, d.weights.dim(0)}, -1, 1);
        worst = std::max(worst, max_abs_diff(dense_forward(dx, d).output, oracle::dense(dx, d.weights, d.bias)));
    }
    o.require(worst <= 1e-12, fmt("max deviation %.3g", worst));
    if (o.pass) o.detail = fmt("50 instances each, max deviation %.2g", worst);
    return o;
}

Outcome softmax_heads() {
    Outcome o;
    auto model = build_model<double>(compact_config(5));
    Rng rng(9);
    const auto x = rng_uniform<double>(rng, {6, 50, 50, 1}, 0, 1);
    const auto fwd = forward(model, x, Mode::infer, rng);
    double worst_sum = 0, worst_shift = 0;
    for (std::size_t h = 0; h < kHeadCount; ++h) {
        const auto& p = fwd.probs[h];
        for (std::size_t r = 0; r < p.dim(0); ++r) {
            double s = 0;
            for (std::size_t c = 0; c < p.dim(1); ++c) s += p.at(r, c);
            worst_sum = std::max(worst_sum, std::abs(s - 1));
        }
    }
    for (int trial = 0; trial < 200; ++trial) {
        const auto z = rng_uniform<double>(rng, {kHeadClassCounts[trial % kHeadCount]}, -30, 30);
        auto shifted = z;
        const double c = rng.uniform(-100, 100);
        for (auto& v : shifted.values()) v += c;
        const auto p = softmax(z);
        double s = 0;
        for (double v : p.values()) s += v;
        worst_sum = std::max(worst_sum, std::abs(s - 1));
        worst_shift = std::max(worst_shift, max_abs_diff(p, softmax(shifted)));
    }
    o.require(worst_sum <= 1e-6, fmt("sum deviates by %.3g", worst_sum));
    o.require(worst_shift <= 1e-12, fmt("shift changes output by %.3g", worst_shift));
    if (o.pass) o.detail = fmt("sum error %.2g, shift error %.2g", worst_sum, worst_shift);
    return o;
}

Outcome loss_linearity() {
    Outcome o;
    auto model = build_model<double>(compact_config(3));
    const auto ex = make_synthetic(16, 4);
    const std::vector<std::size_t> idx{0, 1, 2, 3, 4, 5, 6, 7};
    const auto x = batch_images<double>(ex, idx);
    const auto labels = batch_labels(ex, idx);
    Rng rng(0);
    const auto bl = loss_and_gradient(model, x, std::span<const Labels>(labels), LossWeights{}, Mode::infer, rng);
    const auto& L = bl.loss.head_loss;
    const double want = 2 * L[0] + 4 * L[3] + 1.5 * L[2] + 0.1 * L[1];
    o.require(std::abs(bl.loss.total - want) <= 1e-9, fmt("batch total off by %.3g", bl.loss.total - want));

    const auto table = evaluate(model, std::span<const LabeledExample>(ex));
    const double recorded = 2 * *table.heads[0].loss + 4 * *table.heads[3].loss + 1.5 * *table.heads[2].loss +
                            0.1 * *table.heads[1].loss;
    o.require(std::abs(table.total_loss - recorded) <= 1e-9, "evaluated total is not the weighted sum");

    for (double c : {0.5, 2.0, 8.0}) {
        const PerHead<double> per{L[0], L[1], L[2], L[3]};
        o.require(weighted_total_loss(per, LossWeights{}.scaled(c)) == c * weighted_total_loss(per, LossWeights{}),
                  fmt("scaling by %g is not exact", c));
    }

    LossWeights zero;
    zero.gender = 0;
    zero.age = 0;
    const auto zg = loss_and_gradient(model, x, std::span<const Labels>(labels), zero, Mode::infer, rng);
    const auto params = parameters(model);
    bool all_zero = true;
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i].head != 1 && params[i].head != 3) continue;
        for (double v : zg.grads[i].values()) all_zero = all_zero && v == 0.0;
    }
    o.require(all_zero, "zero-weight head got a non-zero gradient");
    if (o.pass) o.detail = "weighted total within 1e-9, exact scaling, bit-zero gradients for zero weights";
    return o;
}

Outcome masking() {
    Outcome o;
    auto model = build_model<float>(compact_config(8));
    const auto before = model.heads;
    const DatasetSplit d = split(make_synthetic(48, 6, SyntheticLabels::emotion_only), 0.9, 1);
    TrainConfig cfg;
    cfg.max_epochs = 4;
    cfg.batch_size = 16;
    train(model, d, cfg);
    o.require(!(model.heads[0].weights == before[0].weights), "emotion head did not train");
    for (std::size_t h = 1; h < kHeadCount; ++h) {
        o.require(model.heads[h].weights == before[h].weights && model.heads[h].bias == before[h].bias,
                  std::string(kHeadNames[h]) + " head changed");
    }
    if (o.pass) o.detail = "gender/race/age head parameters bit-identical after 4 epochs";
    return o;
}

Outcome overfit() {
    Outcome o;
    set_deterministic(true);
    ModelConfig mc;
    mc.seed = 1;
    auto model = build_model<float>(mc);
    // The training set doubles as the validation set so the recorded
    // infer-mode metrics are train accuracy and loss.
    DatasetSplit d;
    d.train = make_synthetic(64, 7);
    d.validation = d.train;
    TrainConfig cfg;
    cfg.max_epochs = 300;
    cfg.plateau.patience = 1000;
    cfg.early_stop.patience = 1000;
    cfg.early_stop.restore_best = false;
    double min_acc = 0, total = 0;
    const auto t0 = std::chrono::steady_clock::now();
    TrainOptions opt;
    opt.on_epoch_end = [&](const EpochRecord& r) {
        min_acc = 1;
        for (const auto& h : r.validation.heads) min_acc = std::min(min_acc, *h.accuracy);
        total = r.validation.total_loss;
        return !(min_acc >= 0.95 && total < 0.1) && seconds_since(t0) < 300;
    };
    const auto h = train(model, d, cfg, opt);
    const double secs = seconds_since(t0);
    o.require(min_acc >= 0.95, fmt("lowest head accuracy %.3f", min_acc));
    o.require(total < 0.1, fmt("total loss %.4f", total));
    o.require(secs < 300, fmt("took %.0f s", secs));
    o.detail = fmt("%.0f epochs, lowest head accuracy %.3f, total loss %.4f", double(h.epochs.size()), min_acc, total) +
               fmt(", %.0f s", secs);
    return o;
}

Outcome callbacks() {
    Outcome o;
    // Scripted plateau: flat monitor walks the ladder down to the floor.
    auto st = CallbackState<float>::start(3e-4);
    std::vector<double> ladder{st.current_lr};
    for (int e = 0; e < 100 && st.stop_reason == StopReason::none; ++e) {
        reduce_on_plateau(st, PlateauConfig{}, 0.5);
        if (st.current_lr != ladder.back()) ladder.push_back(st.current_lr);
    }
    const double want[] = {3e-4, 6e-5, 1.2e-5, 2.4e-6};
    o.require(ladder.size() == 4 && st.stop_reason == StopReason::lr_floor, "ladder does not end at the floor");
    for (std::size_t i = 0; i < 4 && i < ladder.size(); ++i) {
        o.require(std::abs(ladder[i] - want[i]) <= want[i] * 1e-12, fmt("ladder step %g is %g", double(i), ladder[i]));
    }

    // Real run with a short patience: the returned model re-evaluates to
    // the best recorded monitor value exactly.
    auto model = build_model<float>(compact_config(2));
    const DatasetSplit d = split(make_synthetic(96, 5), 0.75, 2);
    TrainConfig cfg;
    cfg.max_epochs = 30;
    cfg.batch_size = 16;
    cfg.initial_lr = 1e-3;
    cfg.early_stop.patience = 3;
    cfg.plateau.patience = 2;
    const auto h = train(model, d, cfg);
    double best = 0;
    for (const auto& r : h.epochs) best = std::max(best, *r.validation.heads[0].accuracy);
    const double again = *evaluate(model, std::span<const LabeledExample>(d.validation)).heads[0].accuracy;
    o.require(h.restored, "best weights were not restored");
    o.require(h.best_metric == best, "best_metric is not the maximum recorded value");
    o.require(again == best, fmt("re-evaluated %.6f, best %.6f", again, best));
    if (o.pass) {
        o.detail = fmt("ladder 3e-4 -> 2.4e-6 then lr_floor; restored epoch %g re-evaluates to %.4f", double(h.best_epoch),
                       again);
    }
    return o;
}

Outcome pose_cap() {
    Outcome o;
    Rng rng(10);
    RawImage img(48, 48, 1);
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.below(256));
    double worst = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const Point l{rng.uniform(0, 23), rng.uniform(0, 47)}, r{rng.uniform(24, 47), rng.uniform(0, 47)};
        worst = std::max(worst, std::abs(pose_normalize(img, EyePair{l, r}).applied_deg));
    }
    o.require(worst <= 10.0, fmt("applied %.3f degrees", worst));
    const auto level = pose_normalize(img, EyePair{{12, 20}, {36, 20}});
    o.require(level.applied_deg == 0.0 && level.image == img, "level eyes changed the image");
    if (o.pass) o.detail = fmt("1000 fuzzed landmark pairs, max |rotation| %.3f deg; level eyes bit-unchanged", worst);
    return o;
}

Outcome label_golden() {
    Outcome o;
    Labels l;
    l.classes = {0, 0, 0, 0};
    const std::vector<std::vector<int>> want{{1, 0, 0, 0, 0, 0, 0}, {1, 0, 0}, {1, 0, 0}, {1, 0, 0, 0, 0}};
    o.require(one_hot(l) == want, "encoding differs");
    o.require(class_names(Head::emotion)[0] == "surprise" && class_names(Head::gender)[0] == "male" &&
                  class_names(Head::race)[0] == "Caucasian" && class_names(Head::age)[0] == "0-3",
              "class names out of order");
    if (o.pass) o.detail = "(surprise, male, Caucasian, 0-3) -> [[1,0,0,0,0,0,0],[1,0,0],[1,0,0],[1,0,0,0,0]]";
    return o;
}

Outcome determinism() {
    Outcome o;
    set_deterministic(true);
    auto run = [] {
        auto model = build_model<float>(compact_config(21));
        const DatasetSplit d = split(make_synthetic(48, 13), 0.9, 21);
        TrainConfig cfg;
        cfg.max_epochs = 4;
        cfg.batch_size = 16;
        cfg.seed = 21;
        const auto h = train(model, d, cfg);
        return std::make_pair(format_metrics_csv(h), serialize_checkpoint(model));
    };
    const auto a = run(), b = run();
    o.require(a.first == b.first, "metrics.csv differs");
    o.require(a.second == b.second, "checkpoint differs");
    if (o.pass) o.detail = fmt("metrics.csv (%g bytes) and checkpoint (%g bytes) byte-identical", double(a.first.size()),
                               double(a.second.size()));
    return o;
}

Outcome checkpoint_round_trip() {
    Outcome o;
    ModelConfig mc;
    mc.seed = 17;
    const auto model = build_model<float>(mc);
    const std::string bytes = serialize_checkpoint(model);
    const auto back = deserialize_checkpoint<float>(bytes, mc);
    const auto ex = make_synthetic(4, 2);
    const std::vector<std::size_t> idx{0, 1, 2, 3};
    const auto x = batch_images<float>(ex, idx);
    Rng r1(0), r2(0);
    const auto p = forward(model, x, Mode::infer, r1), q = forward(back, x, Mode::infer, r2);
    for (std::size_t h = 0; h < kHeadCount; ++h) o.require(p.probs[h] == q.probs[h], "forward differs after reload");

    auto rejects = [&](const std::string& damaged, auto tag, const char* what) {
        using E = decltype(tag);
        try {
            deserialize_checkpoint<float>(damaged);
            o.require(false, std::string(what) + " accepted");
        } catch (const E&) {
        } catch (const std::exception& e) {
            o.require(false, std::string(what) + " raised the wrong error: " + e.what());
        }
    };
    std::string bad_magic = bytes;
    bad_magic[1] = '?';
    rejects(bad_magic, FormatError(""), "bad magic");
    rejects(bytes.substr(0, bytes.size() - 4), CorruptionError(""), "truncated payload");
    std::string flipped = bytes;
    flipped[bytes.size() - 1] = static_cast<char>(0x7f);
    flipped[bytes.size() - 2] = static_cast<char>(0xc0);
    rejects(flipped, CorruptionError(""), "NaN payload");
    if (o.pass) o.detail = "save/load/forward bit-exact; bad magic, truncation and NaN payload rejected";
    return o;
}

// Non-gating: auxiliary labels are functions of latent factors that also
// determine emotion, so the extra heads should not hurt emotion accuracy.
// Both variants get the same fixed 40-epoch budget at a constant lr; the
// callbacks are disabled because early plateaus stall both before take-off.
Outcome multitask_benefit() {
    Outcome o;
    double multi = 0, single = 0;
    std::string per_seed;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const DatasetSplit d = split(make_latent_factor_set(300, 100 + seed), 0.8, seed);
        for (bool mt : {true, false}) {
            auto model = build_model<float>(compact_config(seed));
            TrainConfig cfg;
            cfg.max_epochs = 40;
            cfg.batch_size = 16;
            cfg.initial_lr = 1e-3;
            cfg.seed = seed;
            cfg.plateau.patience = 1000;
            cfg.early_stop.patience = 1000;
            if (!mt) cfg.loss_weights.gender = cfg.loss_weights.race = cfg.loss_weights.age = 0;
            const auto h = train(model, d, cfg);
            (mt ? multi : single) += h.best_metric / 5;
            per_seed += fmt(mt ? " %.3f/" : "%.3f", h.best_metric);
        }
    }
    o.require(multi >= single - 0.02, "multi-task trails single-task by more than 2 points");
    o.detail = fmt("mean val emotion accuracy multi %.4f vs single %.4f; per seed (multi/single):", multi, single) +
               per_seed;
    return o;
}

}  // namespace

int main() {
    configure_from_environment();
    set_deterministic(true);

    struct Item {
        int id;
        const char* name;
        std::function<Outcome()> run;
        bool gating;
    };
    const std::vector<Item> items{
        {1, "reference numbers", [] {
             return Outcome{true,
                            "statement: published RAF-DB results (emotion single-task 0.4538 vs multi-task 0.7926; gender 0.7832, "
                            "race 0.8610, age 0.7476) need the full dataset and full-scale training; not reproduced here, "
                            "property checks below stand in"};
         }, true},
        {2, "gradient integrity", gradients, true},
        {3, "oracle equivalence", oracle_equivalence, true},
        {4, "softmax head contract", softmax_heads, true},
        {5, "loss-weight linearity", loss_linearity, true},
        {6, "masking (FER mode)", masking, true},
        {7, "overfit smoke test", overfit, true},
        {8, "callback state machine", callbacks, true},
        {9, "pose-normalization cap", pose_cap, true},
        {10, "label-encoding golden", label_golden, true},
        {11, "determinism", determinism, true},
        {12, "checkpoint round-trip", checkpoint_round_trip, true},
        {13, "multi-task benefit (non-gating)", multitask_benefit, false},
    };

    int failures = 0;
    for (const auto& item : items) {
        Outcome r;
        try {
            r = item.run();
        } catch (const std::exception& e) {
            r = Outcome{false, std::string("exception: ") + e.what()};
        }
        if (!r.pass && item.gating) ++failures;
        std::printf("[%s] %2d %s: %s\n", r.pass ? "PASS" : (item.gating ? "FAIL" : "INFO"), item.id, item.name,
                    r.detail.c_str());
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
