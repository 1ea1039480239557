#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "mtfer/model.hpp"

namespace mtfer {

// Layout: 6-byte magic "MTFER\x01", u32 LE header length, a JSON header
// {format_version, model_config, class_names, tensors: [{name, shape,
// offset}], payload_bytes}, then the float32 LE payload in parameters()
// order. Offsets are relative to the payload start.
inline constexpr std::string_view kCheckpointMagic{"MTFER\x01", 6};
inline constexpr int kCheckpointVersion = 1;

template <class T>
std::string serialize_checkpoint(const Model<T>& model);

/// FormatError on bad magic or an unparsable header, VersionError on an
/// unknown format_version, CorruptionError when lengths, offsets or shapes
/// disagree with the header or the embedded config, ConfigError when
/// `expected` is given and differs from the stored architecture.
template <class T>
Model<T> deserialize_checkpoint(std::string_view bytes, const std::optional<ModelConfig>& expected = std::nullopt);

template <class T>
void save_checkpoint(const Model<T>& model, const std::filesystem::path& path);

template <class T>
Model<T> load_checkpoint(const std::filesystem::path& path, const std::optional<ModelConfig>& expected = std::nullopt);

}  // namespace mtfer
