#include "mtfer/preprocess.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <sstream>

#include "mtfer/errors.hpp"
#include "mtfer/text.hpp"

namespace mtfer {

void PreprocessConfig::validate() const {
    if (target_width == 0 || target_height == 0) throw ConfigError("preprocess.target_size: must be positive");
    if (!(max_rotation_deg > 0.0) || !std::isfinite(max_rotation_deg)) {
        throw ConfigError("preprocess.max_rotation_deg: must be > 0, got " + std::to_string(max_rotation_deg));
    }
    for (double w : luma_weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("preprocess.luma_weights: weights must be >= 0");
    }
}

RawImage to_grayscale(const RawImage& image, const PreprocessConfig& cfg) {
    if (image.channels != 1 && image.channels != 3) {
        throw FormatError("to_grayscale expects 1 or 3 channels, got " + std::to_string(image.channels));
    }
    image.validate();
    if (image.channels == 1) return image;
    RawImage out(image.width, image.height, 1);
    const auto& w = cfg.luma_weights;
    for (std::size_t i = 0; i < out.pixels.size(); ++i) {
        const double v = w[0] * image.pixels[3 * i] + w[1] * image.pixels[3 * i + 1] + w[2] * image.pixels[3 * i + 2];
        out.pixels[i] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
    }
    return out;
}

double eye_line_angle_deg(const EyePair& eyes) {
    return std::atan2(eyes.right.y - eyes.left.y, eyes.right.x - eyes.left.x) * 180.0 / std::numbers::pi;
}

namespace {

std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

// Bilinear sample with coordinates clamped to the frame (edge replication).
double sample(const RawImage& img, double x, double y, std::size_t c) {
    x = std::clamp(x, 0.0, static_cast<double>(img.width - 1));
    y = std::clamp(y, 0.0, static_cast<double>(img.height - 1));
    const auto x0 = static_cast<std::size_t>(x);
    const auto y0 = static_cast<std::size_t>(y);
    const std::size_t x1 = std::min(x0 + 1, img.width - 1);
    const std::size_t y1 = std::min(y0 + 1, img.height - 1);
    const double fx = x - static_cast<double>(x0);
    const double fy = y - static_cast<double>(y0);
    const double a = img.at(x0, y0, c), b = img.at(x1, y0, c);
    const double d = img.at(x0, y1, c), e = img.at(x1, y1, c);
    const double top = a + (b - a) * fx;
    const double bottom = d + (e - d) * fx;
    return top + (bottom - top) * fy;
}

void check_eye(const Point& p, const RawImage& img, const char* which) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || p.x < 0.0 || p.y < 0.0 ||
        p.x > static_cast<double>(img.width - 1) || p.y > static_cast<double>(img.height - 1)) {
        std::ostringstream os;
        os << which << " eye (" << p.x << ", " << p.y << ") lies outside the " << img.width << "x" << img.height
           << " image";
        throw LandmarkError(os.str());
    }
}

}  // namespace

Point rotated_position(Point source, double applied_deg, std::size_t width, std::size_t height) {
    const double a = applied_deg * std::numbers::pi / 180.0;
    const double cx = (static_cast<double>(width) - 1.0) / 2.0;
    const double cy = (static_cast<double>(height) - 1.0) / 2.0;
    const double dx = source.x - cx, dy = source.y - cy;
    // Inverse of the sampling map: rotate by -applied.
    return {cx + std::cos(a) * dx + std::sin(a) * dy, cy - std::sin(a) * dx + std::cos(a) * dy};
}

PoseResult pose_normalize(const RawImage& image, const EyePair& eyes, const PreprocessConfig& cfg) {
    image.validate();
    cfg.validate();
    check_eye(eyes.left, image, "left");
    check_eye(eyes.right, image, "right");
    if (!(eyes.left.x < eyes.right.x)) {
        throw LandmarkError("left eye x (" + std::to_string(eyes.left.x) + ") must be smaller than right eye x (" +
                            std::to_string(eyes.right.x) + ")");
    }
    PoseResult r;
    r.measured_deg = eye_line_angle_deg(eyes);
    r.applied_deg = std::clamp(r.measured_deg, -cfg.max_rotation_deg, cfg.max_rotation_deg);
    if (r.applied_deg == 0.0) {
        r.image = image;
        return r;
    }

    const double a = r.applied_deg * std::numbers::pi / 180.0;
    const double cs = std::cos(a), sn = std::sin(a);
    const double cx = (static_cast<double>(image.width) - 1.0) / 2.0;
    const double cy = (static_cast<double>(image.height) - 1.0) / 2.0;
    r.image = RawImage(image.width, image.height, image.channels);
    for (std::size_t y = 0; y < image.height; ++y) {
        for (std::size_t x = 0; x < image.width; ++x) {
            const double dx = static_cast<double>(x) - cx, dy = static_cast<double>(y) - cy;
            const double sx = cx + cs * dx - sn * dy;
            const double sy = cy + sn * dx + cs * dy;
            for (std::size_t c = 0; c < image.channels; ++c) r.image.at(x, y, c) = to_byte(sample(image, sx, sy, c));
        }
    }
    return r;
}

RawImage resize_bilinear(const RawImage& image, std::size_t width, std::size_t height) {
    image.validate();
    if (width == 0 || height == 0) throw DimensionError("resize target must be at least 1x1");
    RawImage out(width, height, image.channels);
    for (std::size_t y = 0; y < height; ++y) {
        // x * (n-1) / (m-1) keeps the identity resize exact.
        const double sy = height > 1 ? static_cast<double>(y) * static_cast<double>(image.height - 1) /
                                           static_cast<double>(height - 1)
                                     : 0.0;
        for (std::size_t x = 0; x < width; ++x) {
            const double sx = width > 1 ? static_cast<double>(x) * static_cast<double>(image.width - 1) /
                                              static_cast<double>(width - 1)
                                        : 0.0;
            for (std::size_t c = 0; c < image.channels; ++c) out.at(x, y, c) = to_byte(sample(image, sx, sy, c));
        }
    }
    return out;
}

template <class T>
Tensor<T> normalize_pixels(const RawImage& image, const PreprocessConfig& cfg) {
    if (image.channels != 1 || image.width != cfg.target_width || image.height != cfg.target_height) {
        throw DimensionError("normalize_pixels expects a " + std::to_string(cfg.target_width) + "x" +
                             std::to_string(cfg.target_height) + " single-channel image, got " +
                             std::to_string(image.width) + "x" + std::to_string(image.height) + "x" +
                             std::to_string(image.channels));
    }
    Tensor<T> t({image.height, image.width, 1});
    for (std::size_t i = 0; i < image.pixels.size(); ++i) t[i] = static_cast<T>(image.pixels[i] / 255.0);
    return t;
}

PreprocessOutcome preprocess_image(const RawImage& image, const std::optional<EyePair>& eyes,
                                   const PreprocessConfig& cfg) {
    cfg.validate();
    PreprocessOutcome out;
    RawImage gray = to_grayscale(image, cfg);
    if (eyes) {
        PoseResult pose = pose_normalize(gray, *eyes, cfg);
        out.applied_deg = pose.applied_deg;
        gray = std::move(pose.image);
    } else {
        out.rotation_skipped = true;
    }
    if (gray.width != cfg.target_width || gray.height != cfg.target_height) {
        gray = resize_bilinear(gray, cfg.target_width, cfg.target_height);
    }
    out.tensor = normalize_pixels<float>(gray, cfg);
    return out;
}

LandmarkTable parse_landmarks_csv(std::string_view text) {
    const auto lines = split_lines(text);
    if (lines.empty() || trim(lines[0]) != "filename,left_x,left_y,right_x,right_y") {
        throw FormatError("landmarks CSV must start with header 'filename,left_x,left_y,right_x,right_y'");
    }
    LandmarkTable table;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const std::string_view line = trim(lines[i]);
        if (line.empty()) continue;
        const auto fields = split(line, ',');
        const std::size_t row = i + 1;
        if (fields.size() != 5) throw RowError(row, "expected 5 fields, got " + std::to_string(fields.size()));
        std::array<double, 4> v{};
        for (std::size_t k = 0; k < 4; ++k) {
            const auto f = trim(fields[k + 1]);
            auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v[k]);
            if (ec != std::errc() || ptr != f.data() + f.size() || !std::isfinite(v[k])) {
                throw RowError(row, "invalid coordinate '" + std::string(f) + "'");
            }
        }
        table[std::string(trim(fields[0]))] = EyePair{{v[0], v[1]}, {v[2], v[3]}};
    }
    return table;
}

LandmarkTable read_landmarks_csv(const std::filesystem::path& path) {
    try {
        return parse_landmarks_csv(read_file(path));
    } catch (const RowError& e) {
        throw RowError(e.row(), path.string() + ": " + e.detail());
    }
}

std::optional<EyePair> find_landmarks(const LandmarkTable& table, const std::string& filename) {
    const std::filesystem::path p(filename);
    for (const std::string& key : {filename, p.filename().string(), p.stem().string()}) {
        if (auto it = table.find(key); it != table.end()) return it->second;
    }
    // Entries may carry an extension the dataset listing does not (or vice versa).
    for (const auto& [name, eyes] : table) {
        if (std::filesystem::path(name).stem() == p.stem()) return eyes;
    }
    return std::nullopt;
}

template Tensor<float> normalize_pixels<float>(const RawImage&, const PreprocessConfig&);
template Tensor<double> normalize_pixels<double>(const RawImage&, const PreprocessConfig&);

}  // namespace mtfer
