#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mtfer/losses.hpp"
#include "mtfer/preprocess.hpp"
#include "mtfer/rng.hpp"
#include "mtfer/tensor.hpp"

namespace mtfer {

/// One preprocessed image with up to four labels.
struct LabeledExample {
    Tensor<float> image;  // [50, 50, 1], values in [0, 1]
    Labels labels;
    std::string source_id;

    HeadMask mask() const { return labels.mask(); }

    /// Throws LabelError if the emotion label is missing or a class is out of
    /// range, DimensionError/RangeError for a malformed image.
    void validate(const PreprocessConfig& cfg = {}) const;
};

/// FER file emotion code -> canonical emotion index. The common FER
/// distribution codes 0=angry 1=disgust 2=fear 3=happy 4=sad 5=surprise
/// 6=neutral; the canonical order is surprise, fear, disgust, happy, sad,
/// angry, neutral.
using EmotionCodeMap = std::array<std::size_t, 7>;
inline constexpr EmotionCodeMap kFerEmotionMap{5, 2, 1, 3, 4, 0, 6};

struct FerOptions {
    EmotionCodeMap emotion_map = kFerEmotionMap;
    PreprocessConfig preprocess;
};

inline constexpr std::size_t kFerSide = 48;

/// CSV with a header naming at least the `emotion` and `pixels` columns
/// (2304 space-separated 0-255 values, row-major 48x48). Row numbers in
/// errors are 1-based file lines.
std::vector<LabeledExample> parse_fer_csv(std::string_view text, const FerOptions& options = {});
std::vector<LabeledExample> load_fer_csv(const std::filesystem::path& path, const FerOptions& options = {});

/// Per-image attribute file layout. The manual-attribute files shipped with
/// RAF-DB hold five landmark lines followed by gender, race and age-group
/// lines; both knobs are configurable for other releases.
struct RafdbLayout {
    std::string attribute_suffix = "_manu_attri.txt";
    std::size_t attribute_skip_lines = 5;
};

struct RafdbOptions {
    RafdbLayout layout;
    PreprocessConfig preprocess;
};

struct IngestReport {
    std::vector<LabeledExample> examples;
    std::size_t rotation_skipped = 0;  // images without a landmarks row
};

/// Emotion list lines are `<filename> <code 1-7>`. Images are looked up as
/// listed, then with a .pgm or .ppm extension. Example order follows the
/// listing regardless of how decoding is parallelised.
IngestReport load_rafdb(const std::filesystem::path& image_dir, const std::filesystem::path& emotion_labels,
                        const std::filesystem::path& attribute_dir,
                        const std::optional<std::filesystem::path>& landmarks, const RafdbOptions& options = {});

struct DatasetSplit {
    std::vector<LabeledExample> train;
    std::vector<LabeledExample> validation;
    std::uint64_t seed = 0;
};

/// Seeded shuffle of [0, n); the first floor(fraction * n) go to train.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t n, double train_fraction,
                                                                            std::uint64_t seed);

/// Throws SizeError for fewer than two examples.
DatasetSplit split(std::vector<LabeledExample> examples, double train_fraction, std::uint64_t seed);

/// Index batches covering [0, count) once, final partial batch kept.
/// Throws SizeError when count is 0 and RangeError when batch_size is 0.
std::vector<std::vector<std::size_t>> batches(std::size_t count, std::size_t batch_size, bool shuffle, Rng& rng);

inline std::vector<std::vector<std::size_t>> batches(std::span<const LabeledExample> examples, std::size_t batch_size,
                                                     bool shuffle, Rng& rng) {
    return batches(examples.size(), batch_size, shuffle, rng);
}

/// Stacks the selected images into [b, h, w, 1].
template <class T>
Tensor<T> batch_images(std::span<const LabeledExample> examples, std::span<const std::size_t> indices);

std::vector<Labels> batch_labels(std::span<const LabeledExample> examples, std::span<const std::size_t> indices);

// Preprocessed cache: "MTFERDS1", u64 LE count, then per example a u16 LE
// source-id length + UTF-8 bytes, 2500 float32 LE pixels and four
// (present u8, class u8) pairs in head order.
inline constexpr std::string_view kDatasetCacheMagic = "MTFERDS1";
inline constexpr std::size_t kCachePixels = 2500;

std::string encode_dataset_cache(std::span<const LabeledExample> examples);
std::vector<LabeledExample> decode_dataset_cache(std::string_view bytes);
void write_dataset_cache(std::span<const LabeledExample> examples, const std::filesystem::path& path);
std::vector<LabeledExample> read_dataset_cache(const std::filesystem::path& path);

/// Byte length of one cache record.
inline std::size_t cache_record_size(const LabeledExample& e) { return 2 + e.source_id.size() + 4 * kCachePixels + 8; }

}  // namespace mtfer
