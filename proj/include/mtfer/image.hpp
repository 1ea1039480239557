#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace mtfer {

/// 8-bit image, interleaved channels, row-major, y pointing down.
struct RawImage {
    std::size_t width = 0;
    std::size_t height = 0;
    std::size_t channels = 1;
    std::vector<std::uint8_t> pixels;

    RawImage() = default;
    RawImage(std::size_t w, std::size_t h, std::size_t c, std::uint8_t fill = 0)
        : width(w), height(h), channels(c), pixels(w * h * c, fill) {}

    std::uint8_t& at(std::size_t x, std::size_t y, std::size_t c = 0) { return pixels[(y * width + x) * channels + c]; }
    std::uint8_t at(std::size_t x, std::size_t y, std::size_t c = 0) const {
        return pixels[(y * width + x) * channels + c];
    }

    /// Throws FormatError unless width, height >= 1 and the buffer size matches.
    void validate() const;

    friend bool operator==(const RawImage&, const RawImage&) = default;
};

/// Binary PGM (P5, 1 channel) or PPM (P6, 3 channels) with maxval 255.
RawImage parse_pnm(std::string_view bytes);
RawImage read_pnm(const std::filesystem::path& path);

std::string encode_pnm(const RawImage& image);
void write_pnm(const RawImage& image, const std::filesystem::path& path);

/// Whole-file read; throws IngestionError naming the file on failure.
std::string read_file(const std::filesystem::path& path);

}  // namespace mtfer
