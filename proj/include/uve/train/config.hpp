/* Copyright (c) 2026 The uvenet Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License. */

#ifndef UVE_TRAIN_CONFIG_HPP_
#define UVE_TRAIN_CONFIG_HPP_

#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "uve/model/config.hpp"

namespace uve {

enum class LrSchedule { cosine, constant };

struct TrainingConfig {
    double learning_rate = 2e-4;
    double min_learning_rate = 1e-7;  // cosine decay floor
    LrSchedule schedule = LrSchedule::cosine;
    int64_t total_iterations = 150000;
    int64_t batch_windows = 4;
    int64_t patch_size = 512;
    double charbonnier_eps = 1e-3;
    double grad_clip_norm = 0.0;  // <= 0 disables
    uint64_t seed = 0;
    int64_t log_interval = 50;
    int64_t checkpoint_interval = 1000;

    void validate() const {
        if (patch_size < 16 || patch_size % 16 != 0)
            throw ConfigError("train: patch_size must be a positive multiple of 16");
        if (batch_windows < 1) throw ConfigError("train: batch_windows must be >= 1");
        if (!(charbonnier_eps > 0)) throw ConfigError("train: charbonnier_eps must be > 0");
        if (total_iterations < 1) throw ConfigError("train: total_iterations must be >= 1");
        if (log_interval < 1 || checkpoint_interval < 1)
            throw ConfigError("train: intervals must be >= 1");
    }

    double lr_at(int64_t iteration) const {
        if (schedule == LrSchedule::constant) return learning_rate;
        const double d = total_iterations > 1
                             ? static_cast<double>(iteration - 1) / static_cast<double>(total_iterations - 1)
                             : 0.0;
        return min_learning_rate +
               0.5 * (learning_rate - min_learning_rate) * (1.0 + std::cos(3.14159265358979323846 * d));
    }
};

// "key = value" config files; '#' starts a comment. Keys are namespaced
// "model.*" and "train.*" (schema in configs/train_example.cfg).
inline std::map<std::string, std::string> load_config_kv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("config: cannot open " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    auto trim = [](std::string s) {
        const char* ws = " \t\r\n";
        const auto b = s.find_first_not_of(ws);
        if (b == std::string::npos) return std::string();
        const auto e = s.find_last_not_of(ws);
        return s.substr(b, e - b + 1);
    };
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: " + path + ":" + std::to_string(lineno) +
                              ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("config: " + path + ":" + std::to_string(lineno) + ": empty key");
        kv[key] = val;
    }
    return kv;
}

namespace detail {
inline bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("config: key '" + key + "' expects a boolean, got '" + v + "'");
}
inline int64_t parse_int(const std::string& v, const std::string& key) {
    try {
        std::size_t pos = 0;
        int64_t r = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return r;
    } catch (...) {
        throw ConfigError("config: key '" + key + "' expects an integer, got '" + v + "'");
    }
}
inline double parse_double(const std::string& v, const std::string& key) {
    try {
        std::size_t pos = 0;
        double r = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return r;
    } catch (...) {
        throw ConfigError("config: key '" + key + "' expects a number, got '" + v + "'");
    }
}
}  // namespace detail

struct RunConfig {
    ModelConfig model;
    TrainingConfig train;
};

inline RunConfig run_config_from_kv(const std::map<std::string, std::string>& kv) {
    RunConfig rc;
    std::set<std::string> seen;
    auto get = [&](const std::string& key, auto&& apply) {
        auto it = kv.find(key);
        if (it != kv.end()) {
            apply(it->second);
            seen.insert(key);
        }
    };
    using detail::parse_bool;
    using detail::parse_double;
    using detail::parse_int;

    // preset first so explicit keys can override it
    get("model.preset", [&](const std::string& v) {
        if (v == "full")
            rc.model = ModelConfig::full_model();
        else if (v == "simplified")
            rc.model = ModelConfig::simplified_model();
        else
            throw ConfigError("config: model.preset must be 'full' or 'simplified'");
    });
    get("model.base_channels", [&](const std::string& v) { rc.model.base_channels = parse_int(v, "model.base_channels"); });
    get("model.blocks_r", [&](const std::string& v) { rc.model.blocks_r = parse_int(v, "model.blocks_r"); });
    get("model.blocks_r2", [&](const std::string& v) { rc.model.blocks_r2 = parse_int(v, "model.blocks_r2"); });
    get("model.blocks_r6", [&](const std::string& v) { rc.model.blocks_r6 = parse_int(v, "model.blocks_r6"); });
    get("model.temporal_radius", [&](const std::string& v) { rc.model.temporal_radius = parse_int(v, "model.temporal_radius"); });
    get("model.use_aenet", [&](const std::string& v) { rc.model.use_aenet = parse_bool(v, "model.use_aenet"); });
    get("model.use_fegm", [&](const std::string& v) { rc.model.use_fegm = parse_bool(v, "model.use_fegm"); });
    get("model.use_frgm", [&](const std::string& v) { rc.model.use_frgm = parse_bool(v, "model.use_frgm"); });
    get("model.global_skip", [&](const std::string& v) { rc.model.global_skip = parse_bool(v, "model.global_skip"); });
    get("model.dckg_layers", [&](const std::string& v) { rc.model.dckg_layers = parse_int(v, "model.dckg_layers"); });

    get("train.learning_rate", [&](const std::string& v) { rc.train.learning_rate = parse_double(v, "train.learning_rate"); });
    get("train.min_learning_rate", [&](const std::string& v) { rc.train.min_learning_rate = parse_double(v, "train.min_learning_rate"); });
    get("train.schedule", [&](const std::string& v) {
        if (v == "cosine")
            rc.train.schedule = LrSchedule::cosine;
        else if (v == "constant")
            rc.train.schedule = LrSchedule::constant;
        else
            throw ConfigError("config: train.schedule must be 'cosine' or 'constant'");
    });
    get("train.total_iterations", [&](const std::string& v) { rc.train.total_iterations = parse_int(v, "train.total_iterations"); });
    get("train.batch_windows", [&](const std::string& v) { rc.train.batch_windows = parse_int(v, "train.batch_windows"); });
    get("train.patch_size", [&](const std::string& v) { rc.train.patch_size = parse_int(v, "train.patch_size"); });
    get("train.charbonnier_eps", [&](const std::string& v) { rc.train.charbonnier_eps = parse_double(v, "train.charbonnier_eps"); });
    get("train.grad_clip_norm", [&](const std::string& v) { rc.train.grad_clip_norm = parse_double(v, "train.grad_clip_norm"); });
    get("train.seed", [&](const std::string& v) { rc.train.seed = static_cast<uint64_t>(parse_int(v, "train.seed")); });
    get("train.log_interval", [&](const std::string& v) { rc.train.log_interval = parse_int(v, "train.log_interval"); });
    get("train.checkpoint_interval", [&](const std::string& v) { rc.train.checkpoint_interval = parse_int(v, "train.checkpoint_interval"); });

    for (const auto& [key, val] : kv)
        if (!seen.contains(key))
            throw ConfigError("config: unknown key '" + key + "'");
    rc.model.validate();
    rc.train.validate();
    return rc;
}

inline RunConfig load_run_config(const std::string& path) {
    return run_config_from_kv(load_config_kv(path));
}

}  // namespace uve

#endif  // UVE_TRAIN_CONFIG_HPP_
