#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "mtfer/image.hpp"
#include "mtfer/tensor.hpp"

namespace mtfer {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

/// Eye centres in image coordinates (y down); left is the image-left eye.
struct EyePair {
    Point left;
    Point right;
};

struct PreprocessConfig {
    std::size_t target_width = 50;
    std::size_t target_height = 50;
    double max_rotation_deg = 10.0;
    std::array<double, 3> luma_weights{0.299, 0.587, 0.114};

    /// Throws ConfigError naming the offending field.
    void validate() const;
};

/// 3 channels -> round(wr*R + wg*G + wb*B); 1 channel -> copy.
RawImage to_grayscale(const RawImage& image, const PreprocessConfig& cfg = {});

/// Angle of the eye line in degrees, atan2(dy, dx).
double eye_line_angle_deg(const EyePair& eyes);

struct PoseResult {
    RawImage image;
    double measured_deg = 0.0;  // eye-line angle before normalisation
    double applied_deg = 0.0;   // measured angle clamped to +-max_rotation_deg
};

/// Rotates the image about its centre so the eye line turns towards the
/// horizontal by at most cfg.max_rotation_deg. Bilinear sampling, edge pixels
/// replicated outside the frame. A zero rotation returns the input unchanged.
/// Throws LandmarkError for eyes outside the image or left.x >= right.x.
PoseResult pose_normalize(const RawImage& image, const EyePair& eyes, const PreprocessConfig& cfg = {});

/// Where a source-image point lands after pose_normalize applied `applied_deg`.
Point rotated_position(Point source, double applied_deg, std::size_t width, std::size_t height);

/// Bilinear resampling on a corner-aligned grid (output corners sample input corners).
RawImage resize_bilinear(const RawImage& image, std::size_t width, std::size_t height);

/// [h, w, 1] tensor of pixel/255. Throws DimensionError unless the image is
/// single-channel and of the configured target size.
template <class T>
Tensor<T> normalize_pixels(const RawImage& image, const PreprocessConfig& cfg = {});

struct PreprocessOutcome {
    Tensor<float> tensor;      // [target_h, target_w, 1]
    double applied_deg = 0.0;
    bool rotation_skipped = false;  // no eye landmarks supplied
};

/// grayscale -> pose normalisation (source resolution) -> resize -> normalise.
PreprocessOutcome preprocess_image(const RawImage& image, const std::optional<EyePair>& eyes,
                                   const PreprocessConfig& cfg = {});

using LandmarkTable = std::map<std::string, EyePair>;

/// CSV with header `filename,left_x,left_y,right_x,right_y`.
LandmarkTable parse_landmarks_csv(std::string_view text);
LandmarkTable read_landmarks_csv(const std::filesystem::path& path);

/// Lookup by exact name, then file name without directories, then stem.
std::optional<EyePair> find_landmarks(const LandmarkTable& table, const std::string& filename);

}  // namespace mtfer
