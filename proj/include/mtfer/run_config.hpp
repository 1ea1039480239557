#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mtfer/data.hpp"
#include "mtfer/model.hpp"
#include "mtfer/preprocess.hpp"
#include "mtfer/trainer.hpp"

namespace mtfer {

enum class DatasetKind { fer_csv, rafdb, cache, synthetic };

std::string_view dataset_kind_name(DatasetKind k);

struct SyntheticConfig {
    std::size_t count = 64;
    std::uint64_t seed = 0;
    bool emotion_only = false;
};

struct DatasetConfig {
    DatasetKind kind = DatasetKind::synthetic;
    std::string path;            // fer_csv: the CSV; cache: the cache file
    std::string image_dir;       // rafdb
    std::string emotion_labels;  // rafdb
    std::string attribute_dir;   // rafdb
    std::string landmarks;       // rafdb, optional
    EmotionCodeMap fer_emotion_map = kFerEmotionMap;
    RafdbLayout rafdb_layout;
    SyntheticConfig synthetic;
};

enum class Precision { single, double_precision };

/// Everything a training run needs. Parsing rejects unknown keys at every
/// level; missing keys keep the defaults below.
struct RunConfig {
    ModelConfig model;
    TrainConfig train;
    PreprocessConfig preprocess;
    DatasetConfig dataset;
    std::string output_dir = "out";
    bool deterministic = false;
    Precision precision = Precision::single;

    void validate() const;
};

/// Throws ConfigError naming the offending field (e.g. "train.loss_weights.age").
RunConfig parse_run_config(std::string_view json_text);
RunConfig load_run_config(const std::filesystem::path& path);

/// Fully-resolved config as pretty-printed JSON; parse_run_config accepts it.
std::string run_config_to_json(const RunConfig& config);

/// Loads the configured dataset. Missing files raise IngestionError.
IngestReport load_dataset(const DatasetConfig& dataset, const PreprocessConfig& preprocess);

}  // namespace mtfer
