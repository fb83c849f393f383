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

#ifndef UVE_MODEL_GUIDANCE_HPP_
#define UVE_MODEL_GUIDANCE_HPP_

#include <iomanip>
#include <sstream>
#include <string>

#include "uve/model/layers.hpp"

namespace uve {

enum class KernelSource { extraction, restoration };

// One 3x3 depthwise kernel per channel per sample, produced by DCKG.
template <typename T>
struct GuidanceKernels {
    Var<T> kernels;  // (samples, 16C, 3, 3)
    KernelSource source = KernelSource::extraction;
};

// Dynamic convolutional kernel generation: adaptive average pooling to 3x3
// followed by depthwise 3x3 convolutions (ReLU between layers). The output
// grid is read as one 3x3 kernel per channel per sample.
template <typename T>
struct Dckg {
    int64_t channels = 0;
    std::vector<Var<T>> ws;  // (1, channels, 3, 3) each
    std::vector<Var<T>> bs;  // (1, channels, 1, 1) each

    Dckg() = default;
    Dckg(int64_t channels_, int64_t layers, Rng& rng) : channels(channels_) {
        for (int64_t i = 0; i < layers; ++i) {
            Tensor<T> w(Shape{1, channels, 3, 3});
            init_uniform(w, rng, 1.0 / 3.0);
            ws.emplace_back(std::move(w), true);
            Tensor<T> b = Tensor<T>::zeros(Shape{1, channels, 1, 1});
            // last-layer bias starts the generated kernels at a 1/9 box filter,
            // keeping the guided path signal-preserving at initialization
            if (i == layers - 1) b.fill(static_cast<T>(1.0 / 9.0));
            bs.emplace_back(std::move(b), true);
        }
    }

    Var<T> forward(Tape<T>* tape, const Var<T>& feature) const {
        const Shape fs = feature.shape();
        require(fs.c == channels, "dckg: feature channels " + std::to_string(fs.c) +
                                      " != configured channels " + std::to_string(channels));
        require(fs.h >= 1 && fs.w >= 1, "dckg: empty spatial input " + fs.str());
        Var<T> x = adaptive_avg_pool(tape, feature, 3, 3);
        for (std::size_t i = 0; i < ws.size(); ++i) {
            x = dyn_depthwise3x3(tape, x, ws[i]);
            x = bias_add(tape, x, bs[i]);
            if (i + 1 < ws.size()) x = relu(tape, x);
        }
        return x;
    }

    void collect(const std::string& prefix, NamedParams<T>& out) {
        for (std::size_t i = 0; i < ws.size(); ++i) {
            out.emplace_back(prefix + ".conv" + std::to_string(i) + ".weight", &ws[i]);
            out.emplace_back(prefix + ".conv" + std::to_string(i) + ".bias", &bs[i]);
        }
    }
};

template <typename T>
GuidanceKernels<T> dckg(Tape<T>* tape, const Var<T>& feature, const Dckg<T>& module,
                        KernelSource source) {
    return GuidanceKernels<T>{module.forward(tape, feature), source};
}

// f(e, m) = shuffle_2(kernels(m unshuffled x4) * (e unshuffled x4))
template <typename T>
Var<T> fegm(Tape<T>* tape, const Var<T>& e_frames, const Var<T>& m, const Dckg<T>& module) {
    auto stage = [](const char* name, auto&& fn) {
        try {
            return fn();
        } catch (const ShapeError& err) {
            throw ShapeError(std::string("fegm[") + name + "]: " + err.what());
        }
    };
    Var<T> m4 = stage("unshuffle-guide", [&] { return pixel_unshuffle(tape, m, 4); });
    Var<T> kernels = stage("dckg", [&] { return module.forward(tape, m4); });
    Var<T> e4 = stage("unshuffle-frames", [&] { return pixel_unshuffle(tape, e_frames, 4); });
    Var<T> guided = stage("apply", [&] { return dyn_depthwise3x3(tape, e4, kernels); });
    return stage("shuffle", [&] { return pixel_shuffle(tape, guided, 2); });
}

// f(r, l) = shuffle_4(kernels(l unshuffled x4) * (r unshuffled x2))
template <typename T>
Var<T> frgm(Tape<T>* tape, const Var<T>& r_frames, const Var<T>& l, const Dckg<T>& module) {
    auto stage = [](const char* name, auto&& fn) {
        try {
            return fn();
        } catch (const ShapeError& err) {
            throw ShapeError(std::string("frgm[") + name + "]: " + err.what());
        }
    };
    Var<T> l4 = stage("unshuffle-guide", [&] { return pixel_unshuffle(tape, l, 4); });
    Var<T> kernels = stage("dckg", [&] { return module.forward(tape, l4); });
    Var<T> r2 = stage("unshuffle-frames", [&] { return pixel_unshuffle(tape, r_frames, 2); });
    Var<T> guided = stage("apply", [&] { return dyn_depthwise3x3(tape, r2, kernels); });
    return stage("shuffle", [&] { return pixel_shuffle(tape, guided, 4); });
}

// Plain-text dump of per-channel kernel grids.
template <typename T>
std::string kernels_to_text(const GuidanceKernels<T>& gk) {
    const Tensor<T>& k = gk.kernels.value();
    const Shape s = k.shape();
    std::ostringstream os;
    os << (gk.source == KernelSource::extraction ? "extraction" : "restoration")
       << " kernels " << s.str() << "\n";
    for (int64_t n = 0; n < s.n; ++n)
        for (int64_t c = 0; c < s.c; ++c) {
            os << "sample " << n << " channel " << c << "\n";
            for (int64_t y = 0; y < 3; ++y) {
                os << " ";
                for (int64_t x = 0; x < 3; ++x)
                    os << " " << std::setw(10) << std::setprecision(5) << static_cast<double>(k.at(n, c, y, x));
                os << "\n";
            }
        }
    return os.str();
}

}  // namespace uve

#endif  // UVE_MODEL_GUIDANCE_HPP_
