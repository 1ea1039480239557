#pragma once

// JSON mapping of the configuration structs. Private to the library: the
// checkpoint header and run configs share it.

#include <set>
#include <string>

#include "json.hpp"
#include "mtfer/errors.hpp"
#include "mtfer/model.hpp"
#include "mtfer/preprocess.hpp"
#include "mtfer/trainer.hpp"

namespace mtfer::detail {

using nlohmann::json;

/// Reads fields out of a JSON object, naming the full path in every error
/// and rejecting keys that were never asked for.
class StrictObject {
public:
    StrictObject(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
    }

    std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    bool has(const std::string& key) const { return j_.contains(key); }

    const json* child(const std::string& key) {
        seen_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    template <class V>
    void get(const std::string& key, V& out) {
        const json* v = child(key);
        if (!v) return;
        out = convert<V>(*v, field(key));
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.count(it.key())) throw ConfigError(field(it.key()) + ": unknown key");
        }
    }

    template <class V>
    static V convert(const json& v, const std::string& name) {
        if constexpr (std::is_same_v<V, bool>) {
            if (!v.is_boolean()) throw ConfigError(name + ": expected true or false");
            return v.get<bool>();
        } else if constexpr (std::is_integral_v<V>) {
            if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0)) {
                throw ConfigError(name + ": expected a non-negative integer");
            }
            return static_cast<V>(v.get<unsigned long long>());
        } else if constexpr (std::is_floating_point_v<V>) {
            if (!v.is_number()) throw ConfigError(name + ": expected a number");
            return v.get<double>();
        } else if constexpr (std::is_same_v<V, std::string>) {
            if (!v.is_string()) throw ConfigError(name + ": expected a string");
            return v.get<std::string>();
        } else {
            static_assert(sizeof(V) == 0, "unsupported config field type");
        }
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

json to_json(const ModelConfig& c);
ModelConfig model_config_from_json(const json& j, const std::string& path);

json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const json& j, const std::string& path);

json to_json(const PreprocessConfig& c);
PreprocessConfig preprocess_config_from_json(const json& j, const std::string& path);

}  // namespace mtfer::detail
