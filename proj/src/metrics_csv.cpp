#include "mtfer/metrics_csv.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>

#include "mtfer/text.hpp"

namespace mtfer {

std::vector<std::string> metrics_columns() {
    std::vector<std::string> cols{"epoch", "lr"};
    for (const char* split : {"train", "val"}) {
        cols.push_back(std::string(split) + "_loss_total");
        for (const char* kind : {"acc", "loss"}) {
            for (auto head : kHeadNames) cols.push_back(std::string(split) + "_" + kind + "_" + std::string(head));
        }
    }
    return cols;
}

namespace {

void append_number(std::string& out, std::optional<double> v) {
    out += ',';
    if (!v) {
        out += "NA";
        return;
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", *v);
    out += buf;
}

void append_table(std::string& out, const EvalTable& t) {
    append_number(out, t.total_loss);
    for (const auto& h : t.heads) append_number(out, h.accuracy);
    for (const auto& h : t.heads) append_number(out, h.loss);
}

}  // namespace

std::string format_metrics_csv(const TrainHistory& history) {
    std::string out;
    const auto cols = metrics_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) {
        if (i) out += ',';
        out += cols[i];
    }
    out += '\n';
    for (const auto& rec : history.epochs) {
        out += std::to_string(rec.epoch);
        append_number(out, rec.lr);
        append_table(out, rec.train);
        append_table(out, rec.validation);
        out += '\n';
    }
    return out;
}

void write_metrics_csv(const TrainHistory& history, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IngestionError("cannot write '" + path.string() + "'");
    out << format_metrics_csv(history);
}

std::size_t MetricsTable::column(std::string_view name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (columns[i] == name) return i;
    }
    throw FormatError("metrics CSV has no column '" + std::string(name) + "'");
}

std::vector<std::optional<double>> MetricsTable::series(std::string_view name) const {
    const std::size_t c = column(name);
    std::vector<std::optional<double>> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r[c]);
    return out;
}

MetricsTable parse_metrics_csv(std::string_view text) {
    std::vector<std::string_view> lines;
    for (auto l : split_lines(text)) {
        if (!trim(l).empty()) lines.push_back(trim(l));
    }
    if (lines.empty()) throw FormatError("metrics CSV is empty");
    MetricsTable t;
    for (auto c : split(lines[0], ',')) t.columns.emplace_back(trim(c));
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto cells = split(lines[i], ',');
        if (cells.size() != t.columns.size()) {
            throw RowError(i + 1, "expected " + std::to_string(t.columns.size()) + " cells, got " +
                                      std::to_string(cells.size()));
        }
        std::vector<std::optional<double>> row;
        for (auto cell : cells) {
            const std::string s(trim(cell));
            if (s == "NA") {
                row.emplace_back();
                continue;
            }
            char* end = nullptr;
            const double v = std::strtod(s.c_str(), &end);
            if (s.empty() || *end != '\0') throw RowError(i + 1, "not a number: '" + s + "'");
            row.emplace_back(v);
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

}  // namespace mtfer
