// mtfer: train, evaluate, predict, preprocess and plot from the command line.
//
// Exit codes: 0 success, 2 configuration or usage error, 3 missing or
// unreadable input data, 4 checkpoint error, 1 anything else.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "mtfer/checkpoint.hpp"
#include "mtfer/image.hpp"
#include "mtfer/metrics_csv.hpp"
#include "mtfer/parallel.hpp"
#include "mtfer/plot.hpp"
#include "mtfer/run_config.hpp"
#include "mtfer/text.hpp"
#include "mtfer/trainer.hpp"

namespace fs = std::filesystem;
using namespace mtfer;

namespace {

enum Exit { kOk = 0, kOther = 1, kUsage = 2, kInput = 3, kCheckpoint = 4 };

struct Failure {
    int code;
    std::string message;
};

// Runs one phase of a command; library errors become the phase's exit code,
// except configuration/usage errors which always exit 2.
template <class Fn>
auto phase(int code, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const ConfigError& e) {
        throw Failure{code == kCheckpoint ? kCheckpoint : kUsage, e.what()};
    } catch (const UsageError& e) {
        throw Failure{kUsage, e.what()};
    } catch (const Error& e) {
        throw Failure{code, e.what()};
    } catch (const fs::filesystem_error& e) {
        throw Failure{code, e.what()};
    }
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Failure{kOther, "cannot write '" + path.string() + "'"};
    out << text;
    if (!out) throw Failure{kOther, "failed writing '" + path.string() + "'"};
}

// A dataset given by path: a directory in RAF-DB layout (images/,
// emotion_labels.txt, attributes/, optional landmarks.csv), a preprocessed
// cache file, or a FER CSV.
DatasetConfig dataset_from_path(const fs::path& path, const std::string& landmarks) {
    DatasetConfig d;
    if (fs::is_directory(path)) {
        d.kind = DatasetKind::rafdb;
        d.image_dir = (path / "images").string();
        d.emotion_labels = (path / "emotion_labels.txt").string();
        d.attribute_dir = (path / "attributes").string();
        if (!landmarks.empty()) {
            d.landmarks = landmarks;
        } else if (fs::exists(path / "landmarks.csv")) {
            d.landmarks = (path / "landmarks.csv").string();
        }
        return d;
    }
    if (!fs::exists(path)) throw IngestionError("dataset not found: " + path.string());
    std::ifstream in(path, std::ios::binary);
    std::string head(kDatasetCacheMagic.size(), '\0');
    in.read(head.data(), static_cast<std::streamsize>(head.size()));
    d.kind = head == kDatasetCacheMagic ? DatasetKind::cache : DatasetKind::fer_csv;
    d.path = path.string();
    return d;
}

void apply_environment(bool config_deterministic) {
    configure_from_environment();
    if (config_deterministic) set_deterministic(true);
}

template <class T>
int train_with(const RunConfig& cfg, const DatasetSplit& data, const fs::path& out_dir) {
    Model<T> model = phase(kUsage, [&] { return build_model<T>(cfg.model); });
    TrainOptions opt;
    opt.log = &std::cerr;
    const TrainHistory history = phase(kOther, [&] { return train(model, data, cfg.train, opt); });

    fs::create_directories(out_dir);
    phase(kCheckpoint, [&] {
        save_checkpoint(model, out_dir / "model.ckpt");
        return 0;
    });
    write_text(out_dir / "metrics.csv", format_metrics_csv(history));
    RunConfig resolved = cfg;
    resolved.output_dir = out_dir.string();
    write_text(out_dir / "run_config.resolved.json", run_config_to_json(resolved));

    std::cout << "stopped: " << stop_reason_name(history.stop_reason) << " after " << history.epochs.size()
              << " epochs; best validation emotion accuracy " << history.best_metric << " at epoch "
              << history.best_epoch << "\n";
    const EvalTable final_val = evaluate(model, std::span<const LabeledExample>(data.validation), cfg.train.loss_weights);
    std::cout << format_eval_table(final_val);
    return kOk;
}

int cmd_train(const std::string& config_path, const std::string& out, std::optional<std::uint64_t> seed) {
    const std::string text = phase(kInput, [&] { return read_file(config_path); });
    RunConfig cfg = phase(kUsage, [&] { return parse_run_config(text); });
    if (seed) cfg.model.seed = cfg.train.seed = *seed;
    if (!out.empty()) cfg.output_dir = out;
    phase(kUsage, [&] {
        apply_environment(cfg.deterministic);
        return 0;
    });
    if (deterministic()) cfg.deterministic = true;

    IngestReport report = phase(kInput, [&] { return load_dataset(cfg.dataset, cfg.preprocess); });
    if (report.rotation_skipped) {
        std::cerr << "warning: no landmarks for " << report.rotation_skipped << " images; rotation skipped\n";
    }
    for (const auto& e : report.examples) phase(kInput, [&] {
        e.validate(cfg.preprocess);
        return 0;
    });
    DatasetSplit data = phase(kInput, [&] { return split(std::move(report.examples), cfg.train.train_fraction, cfg.train.seed); });

    if (cfg.precision == Precision::double_precision) return train_with<double>(cfg, data, cfg.output_dir);
    return train_with<float>(cfg, data, cfg.output_dir);
}

int cmd_eval(const std::string& checkpoint, const std::string& dataset, const std::string& config_path,
             const std::string& landmarks, const std::string& out) {
    phase(kUsage, [&] {
        configure_from_environment();
        return 0;
    });
    const Model<float> model = phase(kCheckpoint, [&] { return load_checkpoint<float>(checkpoint); });

    DatasetConfig dcfg;
    PreprocessConfig pre;
    LossWeights weights;
    if (!config_path.empty()) {
        const std::string text = phase(kInput, [&] { return read_file(config_path); });
        const RunConfig cfg = phase(kUsage, [&] { return parse_run_config(text); });
        dcfg = cfg.dataset;
        pre = cfg.preprocess;
        weights = cfg.train.loss_weights;
    }
    if (!dataset.empty()) dcfg = phase(kInput, [&] { return dataset_from_path(dataset, landmarks); });
    if (dataset.empty() && config_path.empty()) throw Failure{kUsage, "eval needs --dataset or --config"};
    pre.target_height = model.config.input_height;
    pre.target_width = model.config.input_width;

    const IngestReport report = phase(kInput, [&] { return load_dataset(dcfg, pre); });
    const EvalTable table = phase(kCheckpoint, [&] {
        return evaluate(model, std::span<const LabeledExample>(report.examples), weights);
    });
    std::cout << format_eval_table(table);

    nlohmann::json j = nlohmann::json::object();
    j["examples"] = table.examples;
    j["total_loss"] = table.total_loss;
    for (std::size_t h = 0; h < kHeadCount; ++h) {
        const auto& m = table.heads[h];
        nlohmann::json row = {{"present", m.present}};
        row["accuracy"] = m.accuracy ? nlohmann::json(*m.accuracy) : nlohmann::json("N/A");
        row["loss"] = m.loss ? nlohmann::json(*m.loss) : nlohmann::json("N/A");
        j["heads"][std::string(kHeadNames[h])] = row;
    }
    write_text(fs::path(out) / "eval.json", j.dump(2) + "\n");
    return kOk;
}

std::optional<EyePair> parse_eyes(const std::string& s) {
    if (s.empty()) return std::nullopt;
    const auto parts = split(s, ',');
    if (parts.size() != 4) throw Failure{kUsage, "--eyes: expected lx,ly,rx,ry, got '" + s + "'"};
    double v[4];
    for (int i = 0; i < 4; ++i) {
        const std::string p(trim(parts[static_cast<std::size_t>(i)]));
        std::size_t used = 0;
        try {
            v[i] = std::stod(p, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (p.empty() || used != p.size()) throw Failure{kUsage, "--eyes: '" + p + "' is not a number"};
    }
    return EyePair{{v[0], v[1]}, {v[2], v[3]}};
}

int cmd_predict(const std::string& checkpoint, const std::string& image, const std::string& eyes_arg) {
    const auto eyes = parse_eyes(eyes_arg);
    const Model<float> model = phase(kCheckpoint, [&] { return load_checkpoint<float>(checkpoint); });
    const RawImage raw = phase(kInput, [&] { return read_pnm(image); });
    PreprocessConfig pre;
    pre.target_height = model.config.input_height;
    pre.target_width = model.config.input_width;
    const PreprocessOutcome x = phase(kUsage, [&] { return preprocess_image(raw, eyes, pre); });
    const Prediction p = phase(kCheckpoint, [&] { return predict(model, x.tensor); });
    char conf[128];
    std::snprintf(conf, sizeof conf, " (confidence %.4f, %.4f, %.4f, %.4f)", p.confidence[0], p.confidence[1],
                  p.confidence[2], p.confidence[3]);
    std::cout << prediction_labels(p) << conf << "\n";
    return kOk;
}

int cmd_preprocess(const std::string& dataset, const std::string& landmarks, const std::string& out) {
    phase(kUsage, [&] {
        configure_from_environment();
        return 0;
    });
    const DatasetConfig d = phase(kInput, [&] { return dataset_from_path(dataset, landmarks); });
    const IngestReport report = phase(kInput, [&] { return load_dataset(d, PreprocessConfig{}); });
    phase(kOther, [&] {
        write_dataset_cache(std::span<const LabeledExample>(report.examples), out);
        return 0;
    });
    std::cout << "examples: " << report.examples.size() << "\n"
              << "rotation skipped (no landmarks): " << report.rotation_skipped << "\n";
    return kOk;
}

int cmd_plot(const std::string& metrics, const std::string& out) {
    const std::string text = phase(kInput, [&] { return read_file(metrics); });
    const MetricsTable table = phase(kUsage, [&] { return parse_metrics_csv(text); });
    const std::string svg = phase(kUsage, [&] { return render_training_svg(table); });
    write_text(out, svg);
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-task facial emotion recognition"};
    app.require_subcommand(1);

    std::string config, out, checkpoint, dataset, landmarks, image, eyes, metrics;
    std::optional<std::uint64_t> seed;

    auto* train = app.add_subcommand("train", "train a model from a JSON run config");
    train->add_option("--config", config, "run config (JSON)")->required();
    train->add_option("--out", out, "output directory (overrides output_dir)");
    train->add_option("--seed", seed, "seed for initialisation, shuffling and dropout");

    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
    eval->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
    eval->add_option("--dataset", dataset, "FER CSV, dataset cache, or RAF-DB directory");
    eval->add_option("--config", config, "run config whose dataset section to use");
    eval->add_option("--landmarks", landmarks, "landmarks CSV for a RAF-DB directory");
    std::string eval_out = ".";
    eval->add_option("--out", eval_out, "directory for eval.json");

    auto* pred = app.add_subcommand("predict", "label one image");
    pred->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
    pred->add_option("--image", image, "PGM or PPM image")->required();
    pred->add_option("--eyes", eyes, "eye centres lx,ly,rx,ry in image pixels");

    auto* prep = app.add_subcommand("preprocess", "ingest a dataset into a cache file");
    prep->add_option("--dataset", dataset, "FER CSV or RAF-DB directory")->required();
    prep->add_option("--landmarks", landmarks, "landmarks CSV");
    prep->add_option("--out", out, "cache file to write")->required();

    auto* plot = app.add_subcommand("plot", "draw emotion accuracy/loss curves as SVG");
    plot->add_option("--metrics", metrics, "metrics.csv from a training run")->required();
    plot->add_option("--out", out, "SVG file to write")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    try {
        if (*train) return cmd_train(config, out, seed);
        if (*eval) return cmd_eval(checkpoint, dataset, config, landmarks, eval_out);
        if (*pred) return cmd_predict(checkpoint, image, eyes);
        if (*prep) return cmd_preprocess(dataset, landmarks, out);
        if (*plot) return cmd_plot(metrics, out);
    } catch (const Failure& f) {
        std::cerr << "error: " << f.message << "\n";
        return f.code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kOther;
    }
    return kOther;
}
