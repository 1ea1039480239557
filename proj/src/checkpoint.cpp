#include "mtfer/checkpoint.hpp"

#include <fstream>

#include "json_config.hpp"
#include "mtfer/bytes.hpp"
#include "mtfer/image.hpp"

namespace mtfer {

using detail::json;

template <class T>
std::string serialize_checkpoint(const Model<T>& model) {
    const auto tensors = parameter_tensors(model);
    const auto names = parameter_names(model);
    json manifest = json::array();
    std::uint64_t offset = 0;
    for (std::size_t i = 0; i < tensors.size(); ++i) {
        manifest.push_back({{"name", names[i]}, {"shape", tensors[i]->shape()}, {"offset", offset}});
        offset += 4 * tensors[i]->size();
    }
    json classes = json::object();
    for (std::size_t h = 0; h < kHeadCount; ++h) {
        json list = json::array();
        for (auto n : class_names(kHeads[h])) list.push_back(std::string(n));
        classes[std::string(kHeadNames[h])] = list;
    }
    const json header = {{"format_version", kCheckpointVersion},
                         {"model_config", detail::to_json(model.config)},
                         {"class_names", classes},
                         {"tensors", manifest},
                         {"payload_bytes", offset}};
    const std::string text = header.dump();

    ByteWriter w;
    w.bytes(kCheckpointMagic);
    w.u32(static_cast<std::uint32_t>(text.size()));
    w.bytes(text);
    for (const auto* t : tensors) {
        for (T v : t->values()) w.f32(static_cast<float>(v));
    }
    return std::move(w.str());
}

template <class T>
Model<T> deserialize_checkpoint(std::string_view bytes, const std::optional<ModelConfig>& expected) {
    if (bytes.size() < kCheckpointMagic.size() || bytes.substr(0, kCheckpointMagic.size()) != kCheckpointMagic) {
        throw FormatError("not a checkpoint (bad magic)");
    }
    ByteReader r(bytes.substr(kCheckpointMagic.size()));
    const std::uint32_t header_len = r.u32();
    if (header_len > r.remaining()) {
        throw CorruptionError("checkpoint header length " + std::to_string(header_len) + " exceeds file size");
    }
    json header;
    try {
        header = json::parse(r.bytes(header_len));
    } catch (const json::parse_error& e) {
        throw FormatError(std::string("checkpoint header is not valid JSON: ") + e.what());
    }
    if (!header.is_object() || !header.contains("format_version") || !header["format_version"].is_number_integer()) {
        throw FormatError("checkpoint header has no format_version");
    }
    if (header["format_version"].get<long long>() != kCheckpointVersion) {
        throw VersionError("unsupported checkpoint format_version " + header["format_version"].dump());
    }

    ModelConfig config;
    try {
        config = detail::model_config_from_json(header.at("model_config"), "model_config");
        config.validate();
    } catch (const json::exception& e) {
        throw FormatError(std::string("checkpoint header is missing model_config: ") + e.what());
    } catch (const ConfigError& e) {
        throw CorruptionError(std::string("checkpoint model_config is invalid: ") + e.what());
    }
    if (expected && !(*expected == config)) {
        throw ConfigError("checkpoint architecture does not match the expected model config");
    }

    Model<T> model = build_model<T>(config);
    auto params = parameters(model);
    std::uint64_t payload_bytes = 0;
    try {
        const auto& manifest = header.at("tensors");
        payload_bytes = header.at("payload_bytes").get<std::uint64_t>();
        if (!manifest.is_array() || manifest.size() != params.size()) {
            throw CorruptionError("checkpoint lists " + std::to_string(manifest.size()) + " tensors, model has " +
                                  std::to_string(params.size()));
        }
        std::uint64_t expected_offset = 0;
        for (std::size_t i = 0; i < params.size(); ++i) {
            const auto& entry = manifest[i];
            const auto name = entry.at("name").get<std::string>();
            const auto shape = entry.at("shape").get<Shape>();
            const auto offset = entry.at("offset").get<std::uint64_t>();
            if (name != params[i].name || shape != params[i].tensor->shape() || offset != expected_offset) {
                throw CorruptionError("checkpoint tensor " + std::to_string(i) + " ('" + name +
                                      "') does not match the model layout");
            }
            expected_offset += 4 * params[i].tensor->size();
        }
        if (expected_offset != payload_bytes) throw CorruptionError("checkpoint payload_bytes disagrees with tensors");
    } catch (const json::exception& e) {
        throw FormatError(std::string("checkpoint tensor manifest is malformed: ") + e.what());
    }
    if (r.remaining() != payload_bytes) {
        throw CorruptionError("checkpoint payload is " + std::to_string(r.remaining()) + " bytes, header says " +
                              std::to_string(payload_bytes));
    }
    for (auto& p : params) {
        for (auto& v : p.tensor->values()) v = static_cast<T>(r.f32());
        if (!p.tensor->all_finite()) throw CorruptionError("checkpoint tensor '" + p.name + "' holds non-finite values");
    }
    return model;
}

template <class T>
void save_checkpoint(const Model<T>& model, const std::filesystem::path& path) {
    const std::string bytes = serialize_checkpoint(model);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IngestionError("cannot write checkpoint '" + path.string() + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IngestionError("failed writing checkpoint '" + path.string() + "'");
}

template <class T>
Model<T> load_checkpoint(const std::filesystem::path& path, const std::optional<ModelConfig>& expected) {
    return deserialize_checkpoint<T>(read_file(path), expected);
}

#define MTFER_INSTANTIATE(T)                                                                                 \
    template std::string serialize_checkpoint<T>(const Model<T>&);                                          \
    template Model<T> deserialize_checkpoint<T>(std::string_view, const std::optional<ModelConfig>&);       \
    template void save_checkpoint<T>(const Model<T>&, const std::filesystem::path&);                        \
    template Model<T> load_checkpoint<T>(const std::filesystem::path&, const std::optional<ModelConfig>&);

MTFER_INSTANTIATE(float)
MTFER_INSTANTIATE(double)

}  // namespace mtfer
