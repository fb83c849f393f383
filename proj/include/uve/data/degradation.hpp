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

#ifndef UVE_DATA_DEGRADATION_HPP_
#define UVE_DATA_DEGRADATION_HPP_

#include <array>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "uve/core/rng.hpp"
#include "uve/core/tensor.hpp"

namespace uve {

// Synthetic underwater degradation recipe for one clip. Per frame and
// channel: I = J * exp(-beta * d(t)) + B * (1 - exp(-beta * d(t))), then
// Gaussian blur and a brightness gain, clamped to [0, 1].
struct DegradationParams {
    std::string cast = "blue";  // blue | green | yellow | white | other | low_light
    std::array<double, 3> beta = {0.0, 0.0, 0.0};
    std::array<double, 3> backscatter = {0.0, 0.0, 0.0};
    std::vector<double> depth_curve;  // one positive distance per frame
    double blur_sigma = 0.0;
    double gain = 1.0;

    void validate(int64_t frames) const {
        for (double b : beta)
            if (b < 0) throw ConfigError("degradation: beta components must be >= 0");
        for (double b : backscatter)
            if (b < 0 || b > 1) throw ConfigError("degradation: backscatter must be in [0, 1]");
        if (!(gain > 0.0 && gain <= 1.0)) throw ConfigError("degradation: gain must be in (0, 1]");
        if (blur_sigma < 0) throw ConfigError("degradation: blur_sigma must be >= 0");
        if (static_cast<int64_t>(depth_curve.size()) != frames)
            throw ConfigError("degradation: depth_curve length " + std::to_string(depth_curve.size()) +
                              " != frame count " + std::to_string(frames));
        for (std::size_t i = 0; i < depth_curve.size(); ++i) {
            if (!(depth_curve[i] > 0)) throw ConfigError("degradation: depth must be positive");
            if (i > 0 && std::abs(depth_curve[i] - depth_curve[i - 1]) > 0.05 * depth_curve[i - 1] + 1e-12)
                throw ConfigError("degradation: depth_curve not temporally smooth at frame " +
                                  std::to_string(i));
        }
    }

    nlohmann::json to_json() const {
        return nlohmann::json{{"cast", cast},
                              {"beta", beta},
                              {"backscatter", backscatter},
                              {"depth_curve", depth_curve},
                              {"blur_sigma", blur_sigma},
                              {"gain", gain}};
    }
    static DegradationParams from_json(const nlohmann::json& j) {
        DegradationParams p;
        p.cast = j.at("cast").get<std::string>();
        p.beta = j.at("beta").get<std::array<double, 3>>();
        p.backscatter = j.at("backscatter").get<std::array<double, 3>>();
        p.depth_curve = j.at("depth_curve").get<std::vector<double>>();
        p.blur_sigma = j.at("blur_sigma").get<double>();
        p.gain = j.at("gain").get<double>();
        return p;
    }
};

namespace detail {

// separable Gaussian, reflect border
template <typename T>
void gaussian_blur_inplace(Tensor<T>& img, double sigma) {
    if (sigma <= 0.0) return;
    const int64_t radius = std::max<int64_t>(1, static_cast<int64_t>(std::ceil(3.0 * sigma)));
    std::vector<double> taps(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0.0;
    for (int64_t i = -radius; i <= radius; ++i) {
        const double v = std::exp(-0.5 * (static_cast<double>(i) / sigma) * (static_cast<double>(i) / sigma));
        taps[static_cast<std::size_t>(i + radius)] = v;
        sum += v;
    }
    for (double& t : taps) t /= sum;

    const Shape s = img.shape();
    auto reflect = [](int64_t i, int64_t n) {
        if (n == 1) return int64_t(0);
        while (i < 0 || i >= n) {
            if (i < 0) i = -i;
            if (i >= n) i = 2 * n - 2 - i;
        }
        return i;
    };
    std::vector<T> tmp(static_cast<std::size_t>(s.h * s.w));
    for (int64_t n = 0; n < s.n; ++n)
        for (int64_t c = 0; c < s.c; ++c) {
            T* plane = img.data() + (n * s.c + c) * s.h * s.w;
            for (int64_t y = 0; y < s.h; ++y)
                for (int64_t x = 0; x < s.w; ++x) {
                    double acc = 0.0;
                    for (int64_t i = -radius; i <= radius; ++i)
                        acc += taps[static_cast<std::size_t>(i + radius)] * plane[y * s.w + reflect(x + i, s.w)];
                    tmp[static_cast<std::size_t>(y * s.w + x)] = static_cast<T>(acc);
                }
            for (int64_t y = 0; y < s.h; ++y)
                for (int64_t x = 0; x < s.w; ++x) {
                    double acc = 0.0;
                    for (int64_t i = -radius; i <= radius; ++i)
                        acc += taps[static_cast<std::size_t>(i + radius)] * tmp[static_cast<std::size_t>(reflect(y + i, s.h) * s.w + x)];
                    plane[y * s.w + x] = static_cast<T>(acc);
                }
        }
}

}  // namespace detail

// Applies the recipe to a clean clip. Deterministic: the output depends only
// on (clean, p); the seed parameter is accepted for interface stability and
// reserved for stochastic extensions.
template <typename T>
std::vector<Tensor<T>> degrade_clip(const std::vector<Tensor<T>>& clean, const DegradationParams& p,
                                    uint64_t /*seed*/ = 0) {
    p.validate(static_cast<int64_t>(clean.size()));
    std::vector<Tensor<T>> out;
    out.reserve(clean.size());
    for (std::size_t f = 0; f < clean.size(); ++f) {
        const Tensor<T>& j = clean[f];
        const Shape s = j.shape();
        require(s.c == 3, "degrade_clip: expected 3-channel frames, got " + s.str());
        Tensor<T> img(s, ValueRange::pixel);
        const double d = p.depth_curve[f];
        for (int64_t c = 0; c < 3; ++c) {
            const double tr = std::exp(-p.beta[static_cast<std::size_t>(c)] * d);
            const double bs = p.backscatter[static_cast<std::size_t>(c)] * (1.0 - tr);
            const T* src = j.data() + (0 * 3 + c) * s.h * s.w;
            T* dst = img.data() + (0 * 3 + c) * s.h * s.w;
            for (int64_t i = 0; i < s.h * s.w; ++i)
                dst[i] = static_cast<T>(static_cast<double>(src[i]) * tr + bs);
        }
        detail::gaussian_blur_inplace(img, p.blur_sigma);
        if (p.gain != 1.0)
            for (int64_t i = 0; i < img.size(); ++i)
                img[i] = static_cast<T>(static_cast<double>(img[i]) * p.gain);
        for (int64_t i = 0; i < img.size(); ++i)
            img[i] = std::min(T(1), std::max(T(0), img[i]));
        out.push_back(std::move(img));
    }
    return out;
}

// A preset is a named template of sampling ranges; concrete DegradationParams
// are drawn from it per clip. The numeric templates live in a JSON config
// file (configs/degradation_presets.json), not in code.
struct DegradationPreset {
    std::string name;
    std::array<std::array<double, 2>, 3> beta_range;
    std::array<std::array<double, 2>, 3> backscatter_range;
    std::array<double, 2> blur_sigma_range;
    std::array<double, 2> gain_range;
    std::array<double, 2> base_depth_range;

    static DegradationPreset from_json(const nlohmann::json& j) {
        DegradationPreset p;
        p.name = j.at("name").get<std::string>();
        auto arr2 = [](const nlohmann::json& a) {
            return std::array<double, 2>{a.at(0).get<double>(), a.at(1).get<double>()};
        };
        for (int c = 0; c < 3; ++c) {
            p.beta_range[static_cast<std::size_t>(c)] = arr2(j.at("beta").at(c));
            p.backscatter_range[static_cast<std::size_t>(c)] = arr2(j.at("backscatter").at(c));
        }
        p.blur_sigma_range = arr2(j.at("blur_sigma"));
        p.gain_range = arr2(j.at("gain"));
        p.base_depth_range = arr2(j.at("base_depth"));
        return p;
    }
};

inline std::vector<DegradationPreset> load_presets(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("presets: cannot open " + path);
    nlohmann::json j;
    is >> j;
    std::vector<DegradationPreset> out;
    for (const auto& e : j.at("presets")) out.push_back(DegradationPreset::from_json(e));
    if (out.empty()) throw ConfigError("presets: no presets defined in " + path);
    return out;
}

// Draws concrete parameters from a preset: a smooth sinusoidal depth drift
// (successive change well under the 5% smoothness bound) plus uniform draws
// of the scalar ranges.
inline DegradationParams sample_params(const DegradationPreset& preset, int64_t frames, Rng& rng) {
    DegradationParams p;
    p.cast = preset.name;
    for (std::size_t c = 0; c < 3; ++c) {
        p.beta[c] = rng.uniform(preset.beta_range[c][0], preset.beta_range[c][1]);
        p.backscatter[c] = rng.uniform(preset.backscatter_range[c][0], preset.backscatter_range[c][1]);
    }
    p.blur_sigma = rng.uniform(preset.blur_sigma_range[0], preset.blur_sigma_range[1]);
    p.gain = rng.uniform(preset.gain_range[0], preset.gain_range[1]);
    const double base = rng.uniform(preset.base_depth_range[0], preset.base_depth_range[1]);
    const double amp = rng.uniform(0.0, 0.12);
    const double period = rng.uniform(24.0, 60.0);
    const double phase = rng.uniform(0.0, 6.28318530717958647692);
    p.depth_curve.resize(static_cast<std::size_t>(frames));
    for (int64_t f = 0; f < frames; ++f)
        p.depth_curve[static_cast<std::size_t>(f)] =
            base * (1.0 + amp * std::sin(phase + 6.28318530717958647692 * static_cast<double>(f) / period));
    return p;
}

}  // namespace uve

#endif  // UVE_DATA_DEGRADATION_HPP_
