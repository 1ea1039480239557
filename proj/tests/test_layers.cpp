#include "doctest.h"
#include "mtfer/errors.hpp"
#include "mtfer/layers.hpp"
#include "oracles.hpp"

using namespace mtfer;

namespace {

constexpr double kEps = 1e-5;
constexpr double kTol = 1e-4;

// Values bounded away from 0 so ReLU kinks stay outside the FD stencil.
Tensor<double> away_from_zero(Rng& rng, const Shape& s) {
    Tensor<double> t(s);
    for (auto& v : t.values()) {
        const double mag = rng.uniform(0.05, 1.0);
        v = rng.uniform() < 0.5 ? -mag : mag;
    }
    return t;
}

// Pool input whose window entries are all at least 1e-3 apart.
Tensor<double> distinct_values(Rng& rng, const Shape& s) {
    Tensor<double> t(s);
    std::vector<std::size_t> order(t.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order.begin(), order.end());
    for (std::size_t i = 0; i < order.size(); ++i) t[order[i]] = static_cast<double>(i) * 1e-2 - 0.5;
    return t;
}

}  // namespace

TEST_CASE("conv2d gradients match central differences") {
    Rng rng(101);
    for (int trial = 0; trial < 24; ++trial) {
        const std::size_t k = 1 + 2 * rng.below(2), cin = 1 + rng.below(3), cout = 1 + rng.below(3);
        const std::size_t h = 3 + rng.below(4), w = 3 + rng.below(4), n = 1 + rng.below(2);
        const std::size_t stride = 1 + rng.below(2);
        const Padding pad = rng.below(2) ? Padding::same : Padding::valid;
        if (pad == Padding::valid && (h < k || w < k)) continue;
        auto p = make_conv2d<double>(k, cin, cout, stride, pad);
        p.weights = rng_uniform<double>(rng, p.weights.shape(), -1, 1);
        p.bias = rng_uniform<double>(rng, p.bias.shape(), -1, 1);
        auto x = rng_uniform<double>(rng, {n, h, w, cin}, -1, 1);
        const auto fwd = conv2d_forward(x, p);
        const auto r = rng_uniform<double>(rng, fwd.output.shape(), -1, 1);
        const auto g = conv2d_backward(r, fwd.cache, p);
        auto loss = [&] { return oracle::project(conv2d_forward(x, p).output, r); };
        CAPTURE(trial);
        CHECK(oracle::relative_error(g.weights, oracle::numeric_gradient(p.weights, loss, kEps)) <= kTol);
        CHECK(oracle::relative_error(g.bias, oracle::numeric_gradient(p.bias, loss, kEps)) <= kTol);
        CHECK(oracle::relative_error(g.input, oracle::numeric_gradient(x, loss, kEps)) <= kTol);
    }
}

TEST_CASE("dense gradients match central differences") {
    Rng rng(102);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 1 + rng.below(4), in = 1 + rng.below(9), out = 1 + rng.below(7);
        auto p = make_dense<double>(in, out);
        p.weights = rng_uniform<double>(rng, p.weights.shape(), -1, 1);
        p.bias = rng_uniform<double>(rng, p.bias.shape(), -1, 1);
        auto x = rng_uniform<double>(rng, {n, in}, -1, 1);
        const auto fwd = dense_forward(x, p);
        const auto r = rng_uniform<double>(rng, fwd.output.shape(), -1, 1);
        const auto g = dense_backward(r, fwd.cache, p);
        auto loss = [&] { return oracle::project(dense_forward(x, p).output, r); };
        CHECK(oracle::relative_error(g.weights, oracle::numeric_gradient(p.weights, loss, kEps)) <= kTol);
        CHECK(oracle::relative_error(g.bias, oracle::numeric_gradient(p.bias, loss, kEps)) <= kTol);
        CHECK(oracle::relative_error(g.input, oracle::numeric_gradient(x, loss, kEps)) <= kTol);
    }
}

TEST_CASE("maxpool, relu, flatten and dropout gradients match central differences") {
    Rng rng(103);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 1 + rng.below(2), win = 2 + rng.below(2), c = 1 + rng.below(3);
        const std::size_t h = win * (1 + rng.below(3)) + rng.below(2), w = win * (1 + rng.below(3));
        {
            auto x = distinct_values(rng, {n, h, w, c});
            const auto fwd = maxpool_forward(x, win);
            const auto r = rng_uniform<double>(rng, fwd.output.shape(), -1, 1);
            const auto gi = maxpool_backward(r, fwd.cache);
            auto loss = [&] { return oracle::project(maxpool_forward(x, win).output, r); };
            CHECK(oracle::relative_error(gi, oracle::numeric_gradient(x, loss, kEps)) <= kTol);
        }
        {
            auto x = away_from_zero(rng, {n, h, w, c});
            const auto fwd = relu_forward(x);
            const auto r = rng_uniform<double>(rng, x.shape(), -1, 1);
            auto loss = [&] { return oracle::project(relu_forward(x).output, r); };
            CHECK(oracle::relative_error(relu_backward(r, fwd.cache), oracle::numeric_gradient(x, loss, kEps)) <= kTol);
        }
        {
            auto x = rng_uniform<double>(rng, {n, h, w, c}, -1, 1);
            const auto fwd = flatten_forward(x);
            CHECK(fwd.output.shape() == Shape{n, h * w * c});
            const auto r = rng_uniform<double>(rng, fwd.output.shape(), -1, 1);
            auto loss = [&] { return oracle::project(flatten_forward(x).output, r); };
            CHECK(oracle::relative_error(flatten_backward(r, fwd.cache), oracle::numeric_gradient(x, loss, kEps)) <= kTol);
        }
        {
            // The mask is a function of the generator state, so re-seeding
            // replays the same mask for every perturbed evaluation.
            const double rate = rng.uniform(0.1, 0.7);
            const std::uint64_t seed = rng.next_u64();
            auto x = rng_uniform<double>(rng, {n, h * w * c}, -1, 1);
            Rng d(seed);
            const auto fwd = dropout_forward(x, rate, Mode::train, d);
            const auto r = rng_uniform<double>(rng, x.shape(), -1, 1);
            auto loss = [&] {
                Rng again(seed);
                return oracle::project(dropout_forward(x, rate, Mode::train, again).output, r);
            };
            CHECK(oracle::relative_error(dropout_backward(r, fwd.cache), oracle::numeric_gradient(x, loss, kEps)) <= kTol);
        }
    }
}

TEST_CASE("softmax backward matches central differences") {
    Rng rng(104);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 1 + rng.below(4), k = 2 + rng.below(6);
        auto z = rng_uniform<double>(rng, {n, k}, -3, 3);
        const auto fwd = softmax_forward(z);
        const auto r = rng_uniform<double>(rng, fwd.output.shape(), -1, 1);
        auto loss = [&] { return oracle::project(softmax_forward(z).output, r); };
        CHECK(oracle::relative_error(softmax_backward(r, fwd.cache), oracle::numeric_gradient(z, loss, kEps)) <= kTol);
    }
}

TEST_CASE("conv2d, maxpool and dense forward equal the nested-loop oracles") {
    Rng rng(201);
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t k = 1 + rng.below(4), cin = 1 + rng.below(4), cout = 1 + rng.below(4);
        const std::size_t h = k + rng.below(6), w = k + rng.below(6), n = 1 + rng.below(3);
        const std::size_t stride = 1 + rng.below(2);
        const bool same = rng.below(2) == 0;
        auto p = make_conv2d<double>(k, cin, cout, stride, same ? Padding::same : Padding::valid);
        p.weights = rng_uniform<double>(rng, p.weights.shape(), -1, 1);
        p.bias = rng_uniform<double>(rng, p.bias.shape(), -1, 1);
        const auto x = rng_uniform<double>(rng, {n, h, w, cin}, -1, 1);
        const auto got = conv2d_forward(x, p).output;
        const auto want = oracle::conv2d(x, p.weights, p.bias, stride, same);
        REQUIRE(got.shape() == want.shape());
        CHECK(max_abs_diff(got, want) <= 1e-12);

        const std::size_t win = 2 + rng.below(2);
        const auto px = rng_uniform<double>(rng, {n, win * (1 + rng.below(3)) + rng.below(win), win * (1 + rng.below(3)), cin}, -1, 1);
        const auto pgot = maxpool_forward(px, win).output;
        const auto pwant = oracle::maxpool(px, win);
        REQUIRE(pgot.shape() == pwant.shape());
        CHECK(max_abs_diff(pgot, pwant) <= 1e-12);

        const std::size_t in = 1 + rng.below(20), out = 1 + rng.below(10);
        auto d = make_dense<double>(in, out);
        d.weights = rng_uniform<double>(rng, d.weights.shape(), -1, 1);
        d.bias = rng_uniform<double>(rng, d.bias.shape(), -1, 1);
        const auto dx = rng_uniform<double>(rng, {n, in}, -1, 1);
        CHECK(max_abs_diff(dense_forward(dx, d).output, oracle::dense(dx, d.weights, d.bias)) <= 1e-12);
    }
}

TEST_CASE("conv2d same padding keeps the spatial size") {
    auto p = make_conv2d<float>(3, 1, 32);
    const auto y = conv2d_forward(Tensor<float>({2, 50, 50, 1}), p).output;
    CHECK(y.shape() == Shape{2, 50, 50, 32});
    CHECK(conv_output_extent(50, 3, 1, Padding::same) == 50);
    CHECK(conv_output_extent(50, 3, 1, Padding::valid) == 48);
}

TEST_CASE("conv2d rejects a channel mismatch") {
    auto p = make_conv2d<float>(3, 2, 4);
    CHECK_THROWS_AS(conv2d_forward(Tensor<float>({1, 5, 5, 3}), p), DimensionError);
}

TEST_CASE("maxpool floors odd extents and breaks ties toward the first element") {
    const auto y = maxpool_forward(Tensor<float>({1, 25, 25, 1}), 2);
    CHECK(y.output.shape() == Shape{1, 12, 12, 1});
    Tensor<double> x({1, 2, 2, 1}, {3, 3, 3, 3});
    const auto f = maxpool_forward(x, 2);
    const auto g = maxpool_backward(Tensor<double>({1, 1, 1, 1}, {1.0}), f.cache);
    CHECK(g.storage() == std::vector<double>{1, 0, 0, 0});
}

TEST_CASE("relu derivative at zero is zero") {
    Tensor<double> x({3}, {-1.0, 0.0, 2.0});
    const auto f = relu_forward(x);
    CHECK(f.output.storage() == std::vector<double>{0, 0, 2});
    CHECK(relu_backward(Tensor<double>({3}, 1.0), f.cache).storage() == std::vector<double>{0, 0, 1});
}

TEST_CASE("dropout contract") {
    Rng rng(7);
    const auto x = rng_uniform<double>(rng, {4, 1000}, 0.5, 1.5);
    SUBCASE("inference is the identity and consumes no randomness") {
        Rng r(3), untouched(3);
        CHECK(dropout_forward(x, 0.6, Mode::infer, r).output == x);
        CHECK(r == untouched);
    }
    SUBCASE("rate 0 is the identity in training") {
        Rng r(3);
        CHECK(dropout_forward(x, 0.0, Mode::train, r).output == x);
    }
    SUBCASE("kept units are scaled by 1/(1-r) and the drop fraction is about r") {
        Rng r(3);
        const double rate = 0.4;
        const auto y = dropout_forward(x, rate, Mode::train, r).output;
        std::size_t dropped = 0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (y[i] == 0.0) {
                ++dropped;
            } else {
                CHECK(y[i] == doctest::Approx(x[i] / (1 - rate)).epsilon(1e-12));
            }
        }
        CHECK(static_cast<double>(dropped) / static_cast<double>(x.size()) == doctest::Approx(rate).epsilon(0.1));
    }
    SUBCASE("rate outside [0, 1) is rejected") {
        Rng r(3);
        CHECK_THROWS_AS(dropout_forward(x, 1.0, Mode::train, r), RangeError);
        CHECK_THROWS_AS(dropout_forward(x, -0.1, Mode::train, r), RangeError);
    }
}

TEST_CASE("softmax sums to one and is shift invariant") {
    Rng rng(301);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t k = 2 + rng.below(8);
        const auto z = rng_uniform<double>(rng, {k}, -20, 20);
        const auto p = softmax(z);
        double s = 0;
        for (double v : p.values()) s += v;
        CHECK(std::abs(s - 1.0) <= 1e-6);
        auto shifted = z;
        const double c = rng.uniform(-50, 50);
        for (auto& v : shifted.values()) v += c;
        CHECK(max_abs_diff(softmax(shifted), p) <= 1e-12);
    }
}

TEST_CASE("softmax survives huge logits and rejects NaN") {
    const auto p = softmax(Tensor<double>({3}, {1000.0, 1000.0, -1000.0}));
    CHECK(p[0] == doctest::Approx(0.5));
    CHECK(p[2] == 0.0);
    CHECK_THROWS_AS(softmax(Tensor<double>({2}, {std::nan(""), 1.0})), NumericError);
}

TEST_CASE("backward without a cache is a usage error") {
    LayerCache<double> empty;
    auto p = make_dense<double>(2, 2);
    CHECK_THROWS_AS(dense_backward(Tensor<double>({1, 2}), empty, p), UsageError);
    CHECK_THROWS_AS(relu_backward(Tensor<double>({1, 2}), empty), UsageError);
}

TEST_CASE("glorot uniform stays inside its limit and leaves bias zero") {
    Rng rng(1);
    auto p = make_conv2d<double>(3, 4, 8);
    init_glorot_uniform(p, rng);
    const double limit = std::sqrt(6.0 / (3 * 3 * 4 + 3 * 3 * 8));
    for (double v : p.weights.values()) CHECK(std::abs(v) <= limit);
    for (double v : p.bias.values()) CHECK(v == 0.0);
}
