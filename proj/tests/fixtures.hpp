#pragma once

// On-disk dataset fixtures written into a scratch directory.

#include <array>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "mtfer/image.hpp"
#include "mtfer/rng.hpp"

namespace fixture {

namespace fs = std::filesystem;

inline fs::path scratch_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("mtfer_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

inline void write(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path());
    std::ofstream(path, std::ios::binary) << text;
}

struct RafEntry {
    std::string name;  // as listed, e.g. "test_0001.jpg"
    int emotion_code;  // 1-7
    int gender, race, age;
    bool landmarks;
    bool color;
};

// Five images: the first is (surprise, male, Caucasian, 0-3); the last has
// no landmarks row. Images are stored as .pgm/.ppm while the listing names
// .jpg files, as in the released label file.
inline std::vector<RafEntry> raf_entries() {
    return {{"test_0001.jpg", 1, 0, 0, 0, true, true},
            {"test_0002.jpg", 4, 1, 2, 3, true, false},
            {"test_0003.jpg", 7, 2, 1, 4, true, true},
            {"test_0004.jpg", 5, 0, 1, 2, true, false},
            {"test_0005.jpg", 2, 1, 0, 1, false, false}};
}

inline std::string attribute_text(int gender, int race, int age) {
    std::string s;
    for (int i = 0; i < 5; ++i) s += std::to_string(20 + 5 * i) + ".5\t" + std::to_string(30 + i) + ".25\n";
    s += std::to_string(gender) + "\n" + std::to_string(race) + "\n" + std::to_string(age) + "\n";
    return s;
}

/// Writes <dir>/images, emotion_labels.txt, attributes/ and landmarks.csv.
inline void write_rafdb(const fs::path& dir, const std::vector<RafEntry>& entries, std::uint64_t seed = 1) {
    mtfer::Rng rng(seed);
    fs::create_directories(dir / "images");
    std::string labels, landmarks = "filename,left_x,left_y,right_x,right_y\n";
    for (const auto& e : entries) {
        mtfer::RawImage img(64, 60, e.color ? 3 : 1);
        for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.below(256));
        const std::string stem = fs::path(e.name).stem().string();
        mtfer::write_pnm(img, dir / "images" / (stem + (e.color ? ".ppm" : ".pgm")));
        labels += e.name + " " + std::to_string(e.emotion_code) + "\n";
        write(dir / "attributes" / (stem + "_manu_attri.txt"), attribute_text(e.gender, e.race, e.age));
        if (e.landmarks) landmarks += e.name + ",20,28,44,31\n";
    }
    write(dir / "emotion_labels.txt", labels);
    write(dir / "landmarks.csv", landmarks);
}

/// FER-style CSV with `rows` rows; codes cycle through 0-6.
inline std::string fer_csv(std::size_t rows, std::uint64_t seed = 1) {
    mtfer::Rng rng(seed);
    std::string s = "emotion,pixels,Usage\n";
    for (std::size_t r = 0; r < rows; ++r) {
        s += std::to_string(r % 7) + ",";
        for (int i = 0; i < 48 * 48; ++i) {
            if (i) s += ' ';
            s += std::to_string(rng.below(256));
        }
        s += ",Training\n";
    }
    return s;
}

}  // namespace fixture
