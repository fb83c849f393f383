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

#ifndef UVE_MODEL_CONFIG_HPP_
#define UVE_MODEL_CONFIG_HPP_

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "uve/core/tensor.hpp"

namespace uve {

// Architecture hyperparameters. The three residual-block counts are the
// group sizes used per stage: the auxiliary branch stacks blocks_r then
// blocks_r2; the main branch stacks blocks_r6, blocks_r2, blocks_r6.
struct ModelConfig {
    int64_t base_channels = 16;   // C
    int64_t blocks_r = 30;        // R
    int64_t blocks_r2 = 15;       // R/2
    int64_t blocks_r6 = 5;        // R/6
    int64_t temporal_radius = 1;  // t; window length is 2t+1
    bool use_aenet = true;
    bool use_fegm = true;
    bool use_frgm = true;
    bool global_skip = true;
    int64_t dckg_layers = 2;
    static constexpr int64_t downsample_factor = 4;

    int64_t window_length() const { return 2 * temporal_radius + 1; }
    int64_t guidance_channels() const { return 16 * base_channels; }

    static ModelConfig full_model() { return ModelConfig{}; }
    static ModelConfig simplified_model() {
        ModelConfig c;
        c.blocks_r = 10;
        c.blocks_r2 = 3;
        c.blocks_r6 = 1;
        return c;
    }

    void validate() const {
        if (base_channels < 1) throw ConfigError("model: base_channels must be positive");
        if (blocks_r < 1 || blocks_r2 < 1 || blocks_r6 < 1)
            throw ConfigError("model: residual block counts must be positive");
        if (temporal_radius < 0) throw ConfigError("model: temporal_radius must be >= 0");
        if (dckg_layers < 1) throw ConfigError("model: dckg_layers must be >= 1");
        if ((use_fegm || use_frgm) && !use_aenet)
            throw ConfigError("model: use_fegm/use_frgm require use_aenet (guidance kernels come from the auxiliary branch)");
    }

    nlohmann::json to_json() const {
        return nlohmann::json{{"base_channels", base_channels},
                              {"blocks_r", blocks_r},
                              {"blocks_r2", blocks_r2},
                              {"blocks_r6", blocks_r6},
                              {"temporal_radius", temporal_radius},
                              {"use_aenet", use_aenet},
                              {"use_fegm", use_fegm},
                              {"use_frgm", use_frgm},
                              {"global_skip", global_skip},
                              {"dckg_layers", dckg_layers},
                              {"downsample_factor", downsample_factor}};
    }

    static ModelConfig from_json(const nlohmann::json& j) {
        ModelConfig c;
        c.base_channels = j.value("base_channels", c.base_channels);
        c.blocks_r = j.value("blocks_r", c.blocks_r);
        c.blocks_r2 = j.value("blocks_r2", c.blocks_r2);
        c.blocks_r6 = j.value("blocks_r6", c.blocks_r6);
        c.temporal_radius = j.value("temporal_radius", c.temporal_radius);
        c.use_aenet = j.value("use_aenet", c.use_aenet);
        c.use_fegm = j.value("use_fegm", c.use_fegm);
        c.use_frgm = j.value("use_frgm", c.use_frgm);
        c.global_skip = j.value("global_skip", c.global_skip);
        c.dckg_layers = j.value("dckg_layers", c.dckg_layers);
        if (j.value("downsample_factor", int64_t(4)) != 4)
            throw ConfigError("model: downsample_factor is fixed at 4");
        c.validate();
        return c;
    }

    bool operator==(const ModelConfig&) const = default;
};

}  // namespace uve

#endif  // UVE_MODEL_CONFIG_HPP_
