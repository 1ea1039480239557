#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "mtfer/data.hpp"

namespace mtfer {

enum class SyntheticLabels { all_heads, emotion_only };

/// Learnable 50x50 images: each head owns one quadrant in which its class is
/// drawn as a bright bar at a class-specific row, over low-amplitude noise.
/// Pixels are quantised to k/255 so the set survives a PGM round trip.
std::vector<LabeledExample> make_synthetic(std::size_t count, std::uint64_t seed,
                                           SyntheticLabels labels = SyntheticLabels::all_heads);

/// Latent-factor set: gender, race and age labels are the latent factors
/// themselves, emotion is a fixed function of them. Each factor leaves a mark
/// in its own quadrant, so the auxiliary heads give the trunk extra
/// supervision about the same features emotion depends on.
std::vector<LabeledExample> make_latent_factor_set(std::size_t count, std::uint64_t seed, double signal = 0.5,
                                                   double noise = 0.15);

/// Emotion as a function of the latent factors.
std::size_t latent_emotion(std::size_t gender, std::size_t race, std::size_t age);

}  // namespace mtfer
