#include "mtfer/synthetic.hpp"

#include <algorithm>
#include <cmath>

namespace mtfer {

namespace {

constexpr std::size_t kSide = 50;
constexpr std::size_t kQuad = 25;

float quantize(double v) {
    v = std::clamp(v, 0.0, 1.0);
    return static_cast<float>(std::round(v * 255.0) / 255.0);
}

// Adds `amount` to a 3-row bar for class `cls` inside the quadrant of head `h`.
void draw_bar(std::vector<double>& img, std::size_t h, std::size_t cls, double amount) {
    const std::size_t oy = (h / 2) * kQuad, ox = (h % 2) * kQuad;
    const std::size_t row = 1 + 3 * cls;
    for (std::size_t y = row; y < row + 2; ++y) {
        for (std::size_t x = 3; x < kQuad - 3; ++x) img[(oy + y) * kSide + ox + x] += amount;
    }
}

LabeledExample finish(const std::vector<double>& img, Labels labels, std::string id) {
    LabeledExample ex;
    ex.image = Tensor<float>({kSide, kSide, 1});
    for (std::size_t i = 0; i < img.size(); ++i) ex.image[i] = quantize(img[i]);
    ex.labels = labels;
    ex.source_id = std::move(id);
    return ex;
}

}  // namespace

std::vector<LabeledExample> make_synthetic(std::size_t count, std::uint64_t seed, SyntheticLabels mode) {
    Rng rng(seed);
    std::vector<LabeledExample> out;
    out.reserve(count);
    for (std::size_t n = 0; n < count; ++n) {
        Labels labels;
        std::vector<double> img(kSide * kSide);
        for (auto& v : img) v = 0.1 * rng.uniform();
        for (std::size_t h = 0; h < kHeadCount; ++h) {
            // Every head gets a drawn class so images look alike in both modes.
            const auto cls = static_cast<std::size_t>(rng.below(kHeadClassCounts[h]));
            draw_bar(img, h, cls, 0.8);
            if (h == 0 || mode == SyntheticLabels::all_heads) labels.classes[h] = cls;
        }
        out.push_back(finish(img, labels, "synthetic:" + std::to_string(n)));
    }
    return out;
}

std::size_t latent_emotion(std::size_t gender, std::size_t race, std::size_t age) {
    return (gender + 3 * race + 2 * age) % 7;
}

std::vector<LabeledExample> make_latent_factor_set(std::size_t count, std::uint64_t seed, double signal,
                                                   double noise) {
    Rng rng(seed);
    std::vector<LabeledExample> out;
    out.reserve(count);
    for (std::size_t n = 0; n < count; ++n) {
        const auto g = static_cast<std::size_t>(rng.below(3));
        const auto r = static_cast<std::size_t>(rng.below(3));
        const auto a = static_cast<std::size_t>(rng.below(5));
        std::vector<double> img(kSide * kSide);
        for (auto& v : img) v = 0.3 + noise * (rng.uniform() - 0.5);
        draw_bar(img, index(Head::gender), g, signal);
        draw_bar(img, index(Head::race), r, signal);
        draw_bar(img, index(Head::age), a, signal);
        Labels labels;
        labels.classes = {latent_emotion(g, r, a), g, r, a};
        out.push_back(finish(img, labels, "latent:" + std::to_string(n)));
    }
    return out;
}

}  // namespace mtfer
