#include "mtfer/run_config.hpp"

#include "json_config.hpp"
#include "mtfer/image.hpp"
#include "mtfer/synthetic.hpp"

namespace mtfer {

namespace detail {

json to_json(const ModelConfig& c) {
    json blocks = json::array();
    for (const auto& b : c.conv_blocks) blocks.push_back({{"filters", b.filters}, {"convs", b.convs}});
    json heads = json::array();
    for (const auto& h : c.heads) heads.push_back({{"name", h.name}, {"classes", h.classes}});
    return {{"input_height", c.input_height},
            {"input_width", c.input_width},
            {"input_channels", c.input_channels},
            {"kernel_size", c.kernel_size},
            {"pool_window", c.pool_window},
            {"conv_blocks", blocks},
            {"dense_units", c.dense_units},
            {"dropout_schedule", c.dropout_schedule},
            {"heads", heads},
            {"init", c.init},
            {"seed", c.seed}};
}

namespace {

const json& require_array(const json* v, const std::string& name) {
    if (!v->is_array()) throw ConfigError(name + ": expected an array");
    return *v;
}

}  // namespace

ModelConfig model_config_from_json(const json& j, const std::string& path) {
    StrictObject o(j, path);
    ModelConfig c;
    o.get("input_height", c.input_height);
    o.get("input_width", c.input_width);
    o.get("input_channels", c.input_channels);
    o.get("kernel_size", c.kernel_size);
    o.get("pool_window", c.pool_window);
    if (const json* v = o.child("conv_blocks")) {
        c.conv_blocks.clear();
        const auto& arr = require_array(v, o.field("conv_blocks"));
        for (std::size_t i = 0; i < arr.size(); ++i) {
            StrictObject b(arr[i], o.field("conv_blocks") + "[" + std::to_string(i) + "]");
            ConvBlockSpec spec;
            b.get("filters", spec.filters);
            b.get("convs", spec.convs);
            b.finish();
            c.conv_blocks.push_back(spec);
        }
    }
    if (const json* v = o.child("dense_units")) {
        c.dense_units.clear();
        const auto& arr = require_array(v, o.field("dense_units"));
        for (std::size_t i = 0; i < arr.size(); ++i) {
            c.dense_units.push_back(
                StrictObject::convert<std::size_t>(arr[i], o.field("dense_units") + "[" + std::to_string(i) + "]"));
        }
    }
    if (const json* v = o.child("dropout_schedule")) {
        c.dropout_schedule.clear();
        const auto& arr = require_array(v, o.field("dropout_schedule"));
        for (std::size_t i = 0; i < arr.size(); ++i) {
            c.dropout_schedule.push_back(
                StrictObject::convert<double>(arr[i], o.field("dropout_schedule") + "[" + std::to_string(i) + "]"));
        }
    }
    if (const json* v = o.child("heads")) {
        c.heads.clear();
        const auto& arr = require_array(v, o.field("heads"));
        for (std::size_t i = 0; i < arr.size(); ++i) {
            StrictObject h(arr[i], o.field("heads") + "[" + std::to_string(i) + "]");
            HeadSpec spec;
            h.get("name", spec.name);
            h.get("classes", spec.classes);
            h.finish();
            c.heads.push_back(spec);
        }
    }
    o.get("init", c.init);
    o.get("seed", c.seed);
    o.finish();
    return c;
}

json to_json(const TrainConfig& c) {
    return {{"initial_lr", c.initial_lr},
            {"batch_size", c.batch_size},
            {"max_epochs", c.max_epochs},
            {"loss_weights",
             {{"emotion", c.loss_weights.emotion},
              {"gender", c.loss_weights.gender},
              {"race", c.loss_weights.race},
              {"age", c.loss_weights.age}}},
            {"plateau",
             {{"patience", c.plateau.patience},
              {"factor", c.plateau.factor},
              {"min_lr", c.plateau.min_lr},
              {"min_delta", c.plateau.min_delta}}},
            {"early_stop",
             {{"patience", c.early_stop.patience},
              {"min_delta", c.early_stop.min_delta},
              {"restore_best", c.early_stop.restore_best}}},
            {"seed", c.seed},
            {"train_fraction", c.train_fraction}};
}

TrainConfig train_config_from_json(const json& j, const std::string& path) {
    StrictObject o(j, path);
    TrainConfig c;
    o.get("initial_lr", c.initial_lr);
    o.get("batch_size", c.batch_size);
    o.get("max_epochs", c.max_epochs);
    if (const json* v = o.child("loss_weights")) {
        StrictObject w(*v, o.field("loss_weights"));
        w.get("emotion", c.loss_weights.emotion);
        w.get("gender", c.loss_weights.gender);
        w.get("race", c.loss_weights.race);
        w.get("age", c.loss_weights.age);
        w.finish();
    }
    if (const json* v = o.child("plateau")) {
        StrictObject p(*v, o.field("plateau"));
        p.get("patience", c.plateau.patience);
        p.get("factor", c.plateau.factor);
        p.get("min_lr", c.plateau.min_lr);
        p.get("min_delta", c.plateau.min_delta);
        p.finish();
    }
    if (const json* v = o.child("early_stop")) {
        StrictObject e(*v, o.field("early_stop"));
        e.get("patience", c.early_stop.patience);
        e.get("min_delta", c.early_stop.min_delta);
        e.get("restore_best", c.early_stop.restore_best);
        e.finish();
    }
    o.get("seed", c.seed);
    o.get("train_fraction", c.train_fraction);
    o.finish();
    return c;
}

json to_json(const PreprocessConfig& c) {
    return {{"target_width", c.target_width},
            {"target_height", c.target_height},
            {"max_rotation_deg", c.max_rotation_deg},
            {"luma_weights", c.luma_weights}};
}

PreprocessConfig preprocess_config_from_json(const json& j, const std::string& path) {
    StrictObject o(j, path);
    PreprocessConfig c;
    o.get("target_width", c.target_width);
    o.get("target_height", c.target_height);
    o.get("max_rotation_deg", c.max_rotation_deg);
    if (const json* v = o.child("luma_weights")) {
        const auto& arr = require_array(v, o.field("luma_weights"));
        if (arr.size() != 3) throw ConfigError(o.field("luma_weights") + ": expected 3 weights");
        for (std::size_t i = 0; i < 3; ++i) c.luma_weights[i] = StrictObject::convert<double>(arr[i], o.field("luma_weights"));
    }
    o.finish();
    return c;
}

}  // namespace detail

using detail::json;
using detail::StrictObject;

std::string_view dataset_kind_name(DatasetKind k) {
    switch (k) {
        case DatasetKind::fer_csv: return "fer_csv";
        case DatasetKind::rafdb: return "rafdb";
        case DatasetKind::cache: return "cache";
        case DatasetKind::synthetic: return "synthetic";
    }
    return "synthetic";
}

namespace {

DatasetConfig dataset_from_json(const json& j) {
    StrictObject o(j, "dataset");
    DatasetConfig d;
    if (const json* v = o.child("kind")) {
        const auto kind = StrictObject::convert<std::string>(*v, "dataset.kind");
        bool ok = false;
        for (auto k : {DatasetKind::fer_csv, DatasetKind::rafdb, DatasetKind::cache, DatasetKind::synthetic}) {
            if (kind == dataset_kind_name(k)) {
                d.kind = k;
                ok = true;
            }
        }
        if (!ok) throw ConfigError("dataset.kind: expected fer_csv, rafdb, cache or synthetic, got '" + kind + "'");
    }
    o.get("path", d.path);
    o.get("image_dir", d.image_dir);
    o.get("emotion_labels", d.emotion_labels);
    o.get("attribute_dir", d.attribute_dir);
    o.get("landmarks", d.landmarks);
    if (const json* v = o.child("fer_emotion_map")) {
        if (!v->is_array() || v->size() != 7) throw ConfigError("dataset.fer_emotion_map: expected 7 class indices");
        for (std::size_t i = 0; i < 7; ++i) {
            d.fer_emotion_map[i] = StrictObject::convert<std::size_t>((*v)[i], "dataset.fer_emotion_map");
        }
    }
    if (const json* v = o.child("rafdb_layout")) {
        StrictObject r(*v, "dataset.rafdb_layout");
        r.get("attribute_suffix", d.rafdb_layout.attribute_suffix);
        r.get("attribute_skip_lines", d.rafdb_layout.attribute_skip_lines);
        r.finish();
    }
    if (const json* v = o.child("synthetic")) {
        StrictObject s(*v, "dataset.synthetic");
        s.get("count", d.synthetic.count);
        s.get("seed", d.synthetic.seed);
        s.get("emotion_only", d.synthetic.emotion_only);
        s.finish();
    }
    o.finish();
    return d;
}

json dataset_to_json(const DatasetConfig& d) {
    return {{"kind", std::string(dataset_kind_name(d.kind))},
            {"path", d.path},
            {"image_dir", d.image_dir},
            {"emotion_labels", d.emotion_labels},
            {"attribute_dir", d.attribute_dir},
            {"landmarks", d.landmarks},
            {"fer_emotion_map", d.fer_emotion_map},
            {"rafdb_layout",
             {{"attribute_suffix", d.rafdb_layout.attribute_suffix},
              {"attribute_skip_lines", d.rafdb_layout.attribute_skip_lines}}},
            {"synthetic",
             {{"count", d.synthetic.count}, {"seed", d.synthetic.seed}, {"emotion_only", d.synthetic.emotion_only}}}};
}

}  // namespace

void RunConfig::validate() const {
    model.validate();
    train.validate();
    preprocess.validate();
    if (preprocess.target_height != model.input_height || preprocess.target_width != model.input_width ||
        model.input_channels != 1) {
        throw ConfigError("model.input_height: model input must match preprocess target size with 1 channel");
    }
    for (std::size_t i = 0; i < 7; ++i) {
        if (dataset.fer_emotion_map[i] >= 7) throw ConfigError("dataset.fer_emotion_map: indices must be 0-6");
    }
    auto need = [](const std::string& v, const char* field) {
        if (v.empty()) throw ConfigError(std::string("dataset.") + field + ": required for this dataset kind");
    };
    switch (dataset.kind) {
        case DatasetKind::fer_csv:
        case DatasetKind::cache: need(dataset.path, "path"); break;
        case DatasetKind::rafdb:
            need(dataset.image_dir, "image_dir");
            need(dataset.emotion_labels, "emotion_labels");
            need(dataset.attribute_dir, "attribute_dir");
            break;
        case DatasetKind::synthetic:
            if (dataset.synthetic.count < 2) throw ConfigError("dataset.synthetic.count: must be >= 2");
            break;
    }
    if (output_dir.empty()) throw ConfigError("output_dir: must not be empty");
}

RunConfig parse_run_config(std::string_view json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    StrictObject o(j, "");
    RunConfig c;
    if (const json* v = o.child("model")) c.model = detail::model_config_from_json(*v, "model");
    if (const json* v = o.child("train")) c.train = detail::train_config_from_json(*v, "train");
    if (const json* v = o.child("preprocess")) c.preprocess = detail::preprocess_config_from_json(*v, "preprocess");
    if (const json* v = o.child("dataset")) c.dataset = dataset_from_json(*v);
    o.get("output_dir", c.output_dir);
    o.get("deterministic", c.deterministic);
    if (const json* v = o.child("precision")) {
        const auto p = StrictObject::convert<std::string>(*v, "precision");
        if (p == "float") {
            c.precision = Precision::single;
        } else if (p == "double") {
            c.precision = Precision::double_precision;
        } else {
            throw ConfigError("precision: expected 'float' or 'double', got '" + p + "'");
        }
    }
    o.finish();
    c.validate();
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    return parse_run_config(read_file(path));
}

std::string run_config_to_json(const RunConfig& c) {
    json j = {{"model", detail::to_json(c.model)},
              {"train", detail::to_json(c.train)},
              {"preprocess", detail::to_json(c.preprocess)},
              {"dataset", dataset_to_json(c.dataset)},
              {"output_dir", c.output_dir},
              {"deterministic", c.deterministic},
              {"precision", c.precision == Precision::single ? "float" : "double"}};
    return j.dump(2) + "\n";
}

IngestReport load_dataset(const DatasetConfig& d, const PreprocessConfig& preprocess) {
    IngestReport report;
    switch (d.kind) {
        case DatasetKind::fer_csv: {
            FerOptions opt;
            opt.emotion_map = d.fer_emotion_map;
            opt.preprocess = preprocess;
            report.examples = load_fer_csv(d.path, opt);
            break;
        }
        case DatasetKind::rafdb: {
            RafdbOptions opt;
            opt.layout = d.rafdb_layout;
            opt.preprocess = preprocess;
            std::optional<std::filesystem::path> lm;
            if (!d.landmarks.empty()) lm = d.landmarks;
            report = load_rafdb(d.image_dir, d.emotion_labels, d.attribute_dir, lm, opt);
            break;
        }
        case DatasetKind::cache: report.examples = read_dataset_cache(d.path); break;
        case DatasetKind::synthetic:
            report.examples = make_synthetic(d.synthetic.count, d.synthetic.seed,
                                             d.synthetic.emotion_only ? SyntheticLabels::emotion_only
                                                                      : SyntheticLabels::all_heads);
            break;
    }
    return report;
}

}  // namespace mtfer
