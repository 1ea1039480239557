#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string_view>

namespace mtfer {

/// Output heads in canonical order. The order (emotion, gender, race, age)
/// is also the layout of label vectors and of every per-head array.
enum class Head : std::size_t { emotion = 0, gender = 1, race = 2, age = 3 };

inline constexpr std::size_t kHeadCount = 4;

inline constexpr std::array<Head, kHeadCount> kHeads{Head::emotion, Head::gender, Head::race, Head::age};

inline constexpr std::array<std::string_view, kHeadCount> kHeadNames{"emotion", "gender", "race", "age"};

inline constexpr std::array<std::string_view, 7> kEmotionClasses{"surprise", "fear",  "disgust", "happy",
                                                                  "sad",      "angry", "neutral"};
inline constexpr std::array<std::string_view, 3> kGenderClasses{"male", "female", "unsure"};
inline constexpr std::array<std::string_view, 3> kRaceClasses{"Caucasian", "African-American", "Asian"};
inline constexpr std::array<std::string_view, 5> kAgeClasses{"0-3", "4-19", "20-39", "40-69", "70+"};

inline constexpr std::array<std::size_t, kHeadCount> kHeadClassCounts{7, 3, 3, 5};

constexpr std::size_t index(Head h) { return static_cast<std::size_t>(h); }

inline std::span<const std::string_view> class_names(Head h) {
    switch (h) {
        case Head::emotion: return kEmotionClasses;
        case Head::gender: return kGenderClasses;
        case Head::race: return kRaceClasses;
        case Head::age: return kAgeClasses;
    }
    return {};
}

template <class V>
using PerHead = std::array<V, kHeadCount>;

}  // namespace mtfer
