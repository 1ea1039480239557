#include "mtfer/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>

#include "mtfer/bytes.hpp"
#include "mtfer/parallel.hpp"
#include "mtfer/text.hpp"

namespace mtfer {

void LabeledExample::validate(const PreprocessConfig& cfg) const {
    if (image.shape() != Shape{cfg.target_height, cfg.target_width, 1}) {
        throw DimensionError("example '" + source_id + "' image has shape " + shape_to_string(image.shape()));
    }
    for (float v : image.values()) {
        if (!(v >= 0.0f && v <= 1.0f)) throw RangeError("example '" + source_id + "' has a pixel outside [0, 1]");
    }
    if (!labels.classes[index(Head::emotion)]) throw LabelError("example '" + source_id + "' has no emotion label");
    for (std::size_t h = 0; h < kHeadCount; ++h) {
        const auto& c = labels.classes[h];
        if (c && *c >= kHeadClassCounts[h]) {
            throw LabelError("example '" + source_id + "' has " + std::string(kHeadNames[h]) + " class " +
                             std::to_string(*c) + " out of range");
        }
    }
}

namespace {

template <class Int>
bool parse_int(std::string_view s, Int& out) {
    s = trim(s);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size() && !s.empty();
}

}  // namespace

// ---------------------------------------------------------------- FER

std::vector<LabeledExample> parse_fer_csv(std::string_view text, const FerOptions& options) {
    options.preprocess.validate();
    for (std::size_t i = 0; i < options.emotion_map.size(); ++i) {
        if (options.emotion_map[i] >= kHeadClassCounts[0]) throw ConfigError("dataset.fer_emotion_map: index out of range");
    }
    const auto lines = split_lines(text);
    if (lines.empty()) throw FormatError("FER CSV is empty");
    const auto header = split(trim(lines[0]), ',');
    std::size_t emotion_col = header.size(), pixels_col = header.size();
    for (std::size_t i = 0; i < header.size(); ++i) {
        const auto name = trim(header[i]);
        if (name == "emotion") emotion_col = i;
        if (name == "pixels") pixels_col = i;
    }
    if (emotion_col == header.size() || pixels_col == header.size()) {
        throw FormatError("FER CSV header must name 'emotion' and 'pixels' columns");
    }

    std::vector<LabeledExample> out;
    for (std::size_t li = 1; li < lines.size(); ++li) {
        const auto line = trim(lines[li]);
        if (line.empty()) continue;
        const std::size_t row = li + 1;
        const auto fields = split(line, ',');
        if (fields.size() <= std::max(emotion_col, pixels_col)) {
            throw RowError(row, "expected " + std::to_string(header.size()) + " columns, got " + std::to_string(fields.size()));
        }
        int code = -1;
        if (!parse_int(fields[emotion_col], code)) throw RowError(row, "emotion code is not an integer");
        if (code < 0 || code > 6) throw LabelError("row " + std::to_string(row) + ": emotion code " + std::to_string(code) + " outside 0-6");

        RawImage img(kFerSide, kFerSide, 1);
        std::size_t count = 0;
        for (auto tok : split(trim(fields[pixels_col]), ' ')) {
            if (tok.empty()) continue;
            int v = -1;
            if (!parse_int(tok, v) || v < 0 || v > 255) throw RowError(row, "invalid pixel value '" + std::string(tok) + "'");
            if (count < img.pixels.size()) img.pixels[count] = static_cast<std::uint8_t>(v);
            ++count;
        }
        if (count != kFerSide * kFerSide) {
            throw RowError(row, "expected " + std::to_string(kFerSide * kFerSide) + " pixels, got " + std::to_string(count));
        }
        PreprocessOutcome pre = preprocess_image(img, std::nullopt, options.preprocess);
        LabeledExample ex;
        ex.image = std::move(pre.tensor);
        ex.labels.classes[index(Head::emotion)] = options.emotion_map[static_cast<std::size_t>(code)];
        ex.source_id = "fer:" + std::to_string(out.size());
        out.push_back(std::move(ex));
    }
    return out;
}

std::vector<LabeledExample> load_fer_csv(const std::filesystem::path& path, const FerOptions& options) {
    const std::string text = read_file(path);
    try {
        return parse_fer_csv(text, options);
    } catch (const RowError& e) {
        throw RowError(e.row(), path.string() + ": " + e.detail());
    }
}

// ---------------------------------------------------------------- RAF-DB

namespace {

struct RafEntry {
    std::string filename;
    std::size_t emotion;
};

std::vector<RafEntry> parse_emotion_list(const std::filesystem::path& path) {
    const std::string text = read_file(path);
    std::vector<RafEntry> entries;
    const auto lines = split_lines(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto line = trim(lines[i]);
        if (line.empty()) continue;
        const auto sp = line.find_first_of(" \t");
        if (sp == std::string_view::npos) throw RowError(i + 1, path.string() + ": expected '<filename> <code>'");
        int code = 0;
        const auto name = std::string(trim(line.substr(0, sp)));
        if (!parse_int(line.substr(sp + 1), code)) throw RowError(i + 1, path.string() + ": emotion code is not an integer");
        if (code < 1 || code > 7) {
            throw LabelError(path.string() + " line " + std::to_string(i + 1) + ": emotion code " + std::to_string(code) +
                             " for '" + name + "' outside 1-7");
        }
        entries.push_back({name, static_cast<std::size_t>(code - 1)});
    }
    return entries;
}

std::filesystem::path resolve_image(const std::filesystem::path& dir, const std::string& listed) {
    const std::filesystem::path direct = dir / listed;
    if (std::filesystem::is_regular_file(direct)) return direct;
    const auto stem = std::filesystem::path(listed).replace_extension();
    for (const char* ext : {".pgm", ".ppm"}) {
        auto candidate = dir / stem;
        candidate += ext;
        if (std::filesystem::is_regular_file(candidate)) return candidate;
    }
    throw IngestionError("image listed but not found: " + direct.string());
}

PerHead<std::optional<std::size_t>> read_attributes(const std::filesystem::path& file, const RafdbLayout& layout) {
    const std::string text = read_file(file);
    std::vector<std::string_view> values;
    for (auto line : split_lines(text)) {
        if (!trim(line).empty()) values.push_back(trim(line));
    }
    if (values.size() < layout.attribute_skip_lines + 3) {
        throw LabelError(file.string() + ": expected gender, race and age lines after " +
                         std::to_string(layout.attribute_skip_lines) + " leading lines");
    }
    PerHead<std::optional<std::size_t>> out;
    const std::array<Head, 3> order{Head::gender, Head::race, Head::age};
    for (std::size_t k = 0; k < 3; ++k) {
        const Head h = order[k];
        int v = -1;
        const auto s = values[layout.attribute_skip_lines + k];
        if (!parse_int(s, v) || v < 0 || static_cast<std::size_t>(v) >= kHeadClassCounts[index(h)]) {
            throw LabelError(file.string() + ": " + std::string(kHeadNames[index(h)]) + " value '" + std::string(s) +
                             "' out of range");
        }
        out[index(h)] = static_cast<std::size_t>(v);
    }
    return out;
}

}  // namespace

IngestReport load_rafdb(const std::filesystem::path& image_dir, const std::filesystem::path& emotion_labels,
                        const std::filesystem::path& attribute_dir,
                        const std::optional<std::filesystem::path>& landmarks, const RafdbOptions& options) {
    options.preprocess.validate();
    const auto entries = parse_emotion_list(emotion_labels);
    LandmarkTable table;
    if (landmarks) table = read_landmarks_csv(*landmarks);

    std::vector<LabeledExample> examples(entries.size());
    std::vector<char> skipped(entries.size(), 0);
    std::vector<std::exception_ptr> failures(entries.size());
    parallel_for(entries.size(), [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            try {
                const auto& entry = entries[i];
                const auto path = resolve_image(image_dir, entry.filename);
                const RawImage img = read_pnm(path);
                auto stem = std::filesystem::path(entry.filename).replace_extension().string();
                const auto attrs = read_attributes(attribute_dir / (stem + options.layout.attribute_suffix), options.layout);
                const auto eyes = find_landmarks(table, entry.filename);
                PreprocessOutcome pre;
                try {
                    pre = preprocess_image(img, eyes, options.preprocess);
                } catch (const LandmarkError& le) {
                    throw LandmarkError(entry.filename + ": " + le.what());
                }
                LabeledExample& ex = examples[i];
                ex.image = std::move(pre.tensor);
                ex.labels.classes = attrs;
                ex.labels.classes[index(Head::emotion)] = entry.emotion;
                ex.source_id = entry.filename;
                skipped[i] = pre.rotation_skipped ? 1 : 0;
            } catch (...) {
                failures[i] = std::current_exception();
            }
        }
    });
    for (const auto& f : failures) {
        if (f) std::rethrow_exception(f);
    }
    IngestReport report;
    report.examples = std::move(examples);
    report.rotation_skipped = static_cast<std::size_t>(std::count(skipped.begin(), skipped.end(), 1));
    return report;
}

// ---------------------------------------------------------------- split / batch

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t n, double train_fraction,
                                                                            std::uint64_t seed) {
    if (n < 2) throw SizeError("split needs at least 2 examples, got " + std::to_string(n));
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw RangeError("train fraction must be in (0, 1), got " + std::to_string(train_fraction));
    }
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(seed);
    rng.shuffle(order.begin(), order.end());
    // Tolerance keeps e.g. 0.9 * 30 from flooring to 26.
    std::size_t n_train = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(n) + 1e-9));
    n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
    std::vector<std::size_t> train(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    std::vector<std::size_t> val(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
    return {std::move(train), std::move(val)};
}

DatasetSplit split(std::vector<LabeledExample> examples, double train_fraction, std::uint64_t seed) {
    auto [tr, va] = split_indices(examples.size(), train_fraction, seed);
    DatasetSplit s;
    s.seed = seed;
    s.train.reserve(tr.size());
    s.validation.reserve(va.size());
    for (auto i : tr) s.train.push_back(std::move(examples[i]));
    for (auto i : va) s.validation.push_back(std::move(examples[i]));
    return s;
}

std::vector<std::vector<std::size_t>> batches(std::size_t count, std::size_t batch_size, bool shuffle, Rng& rng) {
    if (count == 0) throw SizeError("cannot batch an empty example list");
    if (batch_size == 0) throw RangeError("batch size must be >= 1");
    std::vector<std::size_t> order(count);
    for (std::size_t i = 0; i < count; ++i) order[i] = i;
    if (shuffle) rng.shuffle(order.begin(), order.end());
    std::vector<std::vector<std::size_t>> out;
    for (std::size_t b = 0; b < count; b += batch_size) {
        out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(b),
                         order.begin() + static_cast<std::ptrdiff_t>(std::min(count, b + batch_size)));
    }
    return out;
}

template <class T>
Tensor<T> batch_images(std::span<const LabeledExample> examples, std::span<const std::size_t> indices) {
    if (indices.empty()) throw SizeError("empty batch");
    const Shape& s = examples[indices[0]].image.shape();
    if (s.size() != 3) throw DimensionError("example image must be [h, w, c], got " + shape_to_string(s));
    const std::size_t per = examples[indices[0]].image.size();
    Tensor<T> out({indices.size(), s[0], s[1], s[2]});
    for (std::size_t b = 0; b < indices.size(); ++b) {
        const auto& img = examples[indices[b]].image;
        if (img.shape() != s) throw DimensionError("examples in a batch have different image shapes");
        std::copy(img.data(), img.data() + per, out.data() + b * per);
    }
    return out;
}

std::vector<Labels> batch_labels(std::span<const LabeledExample> examples, std::span<const std::size_t> indices) {
    std::vector<Labels> out;
    out.reserve(indices.size());
    for (auto i : indices) out.push_back(examples[i].labels);
    return out;
}

template Tensor<float> batch_images<float>(std::span<const LabeledExample>, std::span<const std::size_t>);
template Tensor<double> batch_images<double>(std::span<const LabeledExample>, std::span<const std::size_t>);

// ---------------------------------------------------------------- cache

std::string encode_dataset_cache(std::span<const LabeledExample> examples) {
    ByteWriter w;
    w.bytes(kDatasetCacheMagic);
    w.u64(examples.size());
    for (const auto& e : examples) {
        if (e.image.size() != kCachePixels) {
            throw DimensionError("cache records hold 2500 pixels; example '" + e.source_id + "' has " +
                                 std::to_string(e.image.size()));
        }
        if (e.source_id.size() > 0xffff) throw FormatError("source id longer than 65535 bytes: " + e.source_id.substr(0, 64));
        w.u16(static_cast<std::uint16_t>(e.source_id.size()));
        w.bytes(e.source_id);
        for (float v : e.image.values()) w.f32(v);
        for (std::size_t h = 0; h < kHeadCount; ++h) {
            const auto& c = e.labels.classes[h];
            w.u8(c ? 1 : 0);
            w.u8(c ? static_cast<std::uint8_t>(*c) : 0);
        }
    }
    return std::move(w.str());
}

std::vector<LabeledExample> decode_dataset_cache(std::string_view bytes) {
    if (bytes.size() < kDatasetCacheMagic.size() || bytes.substr(0, kDatasetCacheMagic.size()) != kDatasetCacheMagic) {
        throw FormatError("not a dataset cache (bad magic)");
    }
    ByteReader r(bytes.substr(kDatasetCacheMagic.size()));
    const std::uint64_t count = r.u64();
    // Each record takes at least 10010 bytes; reject impossible counts before allocating.
    if (count > r.remaining() / (2 + 4 * kCachePixels + 8)) {
        throw CorruptionError("dataset cache declares " + std::to_string(count) + " records but holds " +
                              std::to_string(r.remaining()) + " bytes");
    }
    std::vector<LabeledExample> out;
    out.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        LabeledExample e;
        const std::uint16_t len = r.u16();
        e.source_id = std::string(r.bytes(len));
        e.image = Tensor<float>({50, 50, 1});
        for (auto& v : e.image.values()) v = r.f32();
        for (std::size_t h = 0; h < kHeadCount; ++h) {
            const std::uint8_t present = r.u8();
            const std::uint8_t cls = r.u8();
            if (present > 1) throw CorruptionError("record " + std::to_string(i) + ": invalid presence flag");
            if (present) {
                if (cls >= kHeadClassCounts[h]) throw CorruptionError("record " + std::to_string(i) + ": class out of range");
                e.labels.classes[h] = cls;
            }
        }
        out.push_back(std::move(e));
    }
    if (r.remaining() != 0) throw CorruptionError("trailing bytes after the last cache record");
    return out;
}

void write_dataset_cache(std::span<const LabeledExample> examples, const std::filesystem::path& path) {
    const std::string bytes = encode_dataset_cache(examples);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IngestionError("cannot write '" + path.string() + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::vector<LabeledExample> read_dataset_cache(const std::filesystem::path& path) {
    return decode_dataset_cache(read_file(path));
}

}  // namespace mtfer
