#include "mtfer/image.hpp"

#include <cctype>
#include <fstream>
#include <iterator>
#include <sstream>

#include "mtfer/errors.hpp"

namespace mtfer {

void RawImage::validate() const {
    if (width < 1 || height < 1) throw FormatError("image dimensions must be at least 1x1");
    if (channels != 1 && channels != 3) throw FormatError("image must have 1 or 3 channels, got " + std::to_string(channels));
    if (pixels.size() != width * height * channels) throw FormatError("image buffer size does not match its dimensions");
}

namespace {

class PnmHeaderReader {
public:
    explicit PnmHeaderReader(std::string_view bytes) : bytes_(bytes) {}

    std::size_t next_number(const char* what) {
        skip_space_and_comments();
        std::size_t value = 0;
        bool any = false;
        while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
            value = value * 10 + static_cast<std::size_t>(bytes_[pos_] - '0');
            if (value > (1u << 24)) throw FormatError(std::string("PNM ") + what + " is too large");
            any = true;
            ++pos_;
        }
        if (!any) throw FormatError(std::string("PNM header: expected ") + what);
        return value;
    }

    // Exactly one whitespace byte separates maxval from the raster.
    std::size_t raster_start() {
        if (pos_ >= bytes_.size() || !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
            throw FormatError("PNM header: missing separator before raster");
        }
        return pos_ + 1;
    }

private:
    void skip_space_and_comments() {
        while (pos_ < bytes_.size()) {
            const char c = bytes_[pos_];
            if (c == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                ++pos_;
            } else {
                break;
            }
        }
    }

    std::string_view bytes_;
    std::size_t pos_ = 2;
};

}  // namespace

RawImage parse_pnm(std::string_view bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
        throw FormatError("not a binary PGM (P5) or PPM (P6) image");
    }
    PnmHeaderReader reader(bytes);
    const std::size_t width = reader.next_number("width");
    const std::size_t height = reader.next_number("height");
    const std::size_t maxval = reader.next_number("maxval");
    if (width == 0 || height == 0) throw FormatError("PNM image has a zero dimension");
    if (maxval != 255) throw FormatError("PNM maxval must be 255, got " + std::to_string(maxval));
    const std::size_t start = reader.raster_start();
    RawImage img(width, height, bytes[1] == '5' ? 1 : 3);
    if (bytes.size() - start < img.pixels.size()) {
        throw FormatError("PNM raster truncated: expected " + std::to_string(img.pixels.size()) + " bytes, got " +
                          std::to_string(bytes.size() - start));
    }
    std::copy(bytes.begin() + static_cast<std::ptrdiff_t>(start),
              bytes.begin() + static_cast<std::ptrdiff_t>(start + img.pixels.size()), img.pixels.begin());
    return img;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestionError("cannot open '" + path.string() + "'");
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IngestionError("error reading '" + path.string() + "'");
    return bytes;
}

RawImage read_pnm(const std::filesystem::path& path) {
    const std::string bytes = read_file(path);
    try {
        return parse_pnm(bytes);
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

std::string encode_pnm(const RawImage& image) {
    image.validate();
    std::ostringstream os;
    os << (image.channels == 1 ? "P5" : "P6") << '\n' << image.width << ' ' << image.height << "\n255\n";
    std::string out = os.str();
    out.append(image.pixels.begin(), image.pixels.end());
    return out;
}

void write_pnm(const RawImage& image, const std::filesystem::path& path) {
    const std::string bytes = encode_pnm(image);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IngestionError("cannot write '" + path.string() + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace mtfer
