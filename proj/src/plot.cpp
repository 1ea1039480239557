#include "mtfer/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace mtfer {

namespace {

constexpr double kPanelW = 420, kPanelH = 300, kMarginL = 60, kMarginT = 40, kGap = 40;
constexpr double kPlotW = kPanelW - kMarginL - 20, kPlotH = kPanelH - kMarginT - 50;

struct Series {
    const char* label;
    const char* color;
    std::vector<std::optional<double>> values;
};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

void panel(std::string& svg, double x0, const char* title, const char* ylabel, const std::vector<double>& epochs,
           const std::vector<Series>& series) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& s : series) {
        for (const auto& v : s.values) {
            if (v && std::isfinite(*v)) {
                lo = std::min(lo, *v);
                hi = std::max(hi, *v);
            }
        }
    }
    if (!std::isfinite(lo)) lo = 0, hi = 1;
    if (hi - lo < 1e-12) lo -= 0.5, hi += 0.5;
    const double e0 = epochs.front(), e1 = epochs.back();
    const double espan = e1 > e0 ? e1 - e0 : 1.0;
    auto px = [&](double e) { return x0 + kMarginL + (epochs.size() == 1 ? kPlotW / 2 : (e - e0) / espan * kPlotW); };
    auto py = [&](double v) { return kMarginT + (hi - v) / (hi - lo) * kPlotH; };

    svg += "<g class=\"panel\">\n";
    svg += "<text x=\"" + num(x0 + kPanelW / 2) + "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" + title +
           "</text>\n";
    svg += "<rect x=\"" + num(x0 + kMarginL) + "\" y=\"" + num(kMarginT) + "\" width=\"" + num(kPlotW) +
           "\" height=\"" + num(kPlotH) + "\" fill=\"none\" stroke=\"#444\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double v = lo + (hi - lo) * i / 4.0;
        svg += "<text x=\"" + num(x0 + kMarginL - 6) + "\" y=\"" + num(py(v) + 4) +
               "\" text-anchor=\"end\" font-size=\"10\">" + tick(v) + "</text>\n";
    }
    svg += "<text x=\"" + num(x0 + kMarginL) + "\" y=\"" + num(kMarginT + kPlotH + 14) +
           "\" text-anchor=\"middle\" font-size=\"10\">" + tick(e0) + "</text>\n";
    svg += "<text x=\"" + num(x0 + kMarginL + kPlotW) + "\" y=\"" + num(kMarginT + kPlotH + 14) +
           "\" text-anchor=\"middle\" font-size=\"10\">" + tick(e1) + "</text>\n";
    svg += "<text class=\"x-label\" x=\"" + num(x0 + kMarginL + kPlotW / 2) + "\" y=\"" +
           num(kMarginT + kPlotH + 32) + "\" text-anchor=\"middle\" font-size=\"12\">epoch</text>\n";
    const double ly = kMarginT + kPlotH / 2;
    svg += "<text class=\"y-label\" x=\"" + num(x0 + 14) + "\" y=\"" + num(ly) +
           "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 " + num(x0 + 14) + " " + num(ly) +
           ")\">" + ylabel + "</text>\n";

    for (const auto& s : series) {
        std::string points;
        std::size_t n = 0;
        double cx = 0, cy = 0;
        for (std::size_t i = 0; i < epochs.size(); ++i) {
            if (!s.values[i] || !std::isfinite(*s.values[i])) continue;
            cx = px(epochs[i]);
            cy = py(*s.values[i]);
            if (n++) points += ' ';
            points += num(cx) + "," + num(cy);
        }
        svg += "<polyline fill=\"none\" stroke=\"" + std::string(s.color) + "\" stroke-width=\"2\" points=\"" +
               points + "\"/>\n";
        if (n == 1) {
            svg += "<circle cx=\"" + num(cx) + "\" cy=\"" + num(cy) + "\" r=\"3\" fill=\"" + s.color + "\"/>\n";
        }
    }
    // Legend
    double lx = x0 + kMarginL + 8, legend_y = kMarginT + 12;
    for (const auto& s : series) {
        svg += "<rect x=\"" + num(lx) + "\" y=\"" + num(legend_y - 8) + "\" width=\"12\" height=\"4\" fill=\"" +
               s.color + "\"/>\n";
        svg += "<text class=\"legend\" x=\"" + num(lx + 16) + "\" y=\"" + num(legend_y - 3) + "\" font-size=\"11\">" +
               s.label + "</text>\n";
        legend_y += 14;
    }
    svg += "</g>\n";
}

}  // namespace

std::string render_training_svg(const MetricsTable& table) {
    const auto epoch_col = table.series("epoch");
    std::vector<Series> acc{{"train", "#1f77b4", table.series("train_acc_emotion")},
                            {"validation", "#d62728", table.series("val_acc_emotion")}};
    std::vector<Series> loss{{"train", "#1f77b4", table.series("train_loss_emotion")},
                             {"validation", "#d62728", table.series("val_loss_emotion")}};
    if (table.rows.empty()) throw FormatError("metrics CSV has no epoch rows");
    std::vector<double> epochs;
    for (const auto& e : epoch_col) {
        if (!e) throw FormatError("metrics CSV has an NA epoch");
        epochs.push_back(*e);
    }

    std::string svg = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(2 * kPanelW + kGap) + "\" height=\"" +
           num(kPanelH) + "\" viewBox=\"0 0 " + num(2 * kPanelW + kGap) + " " + num(kPanelH) + "\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    panel(svg, 0, "Emotion accuracy", "accuracy", epochs, acc);
    panel(svg, kPanelW + kGap, "Emotion loss", "loss", epochs, loss);
    svg += "</svg>\n";
    return svg;
}

}  // namespace mtfer
