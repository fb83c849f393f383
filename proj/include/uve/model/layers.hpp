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

#ifndef UVE_MODEL_LAYERS_HPP_
#define UVE_MODEL_LAYERS_HPP_

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "uve/core/ops.hpp"
#include "uve/core/rng.hpp"

namespace uve {

template <typename T>
using NamedParams = std::vector<std::pair<std::string, Var<T>*>>;

template <typename T>
inline void init_uniform(Tensor<T>& t, Rng& rng, double bound) {
    for (int64_t i = 0; i < t.size(); ++i) t[i] = static_cast<T>(rng.uniform(-bound, bound));
}

// fan-in scaled uniform init; `scale` shrinks output-side convs toward identity
template <typename T>
inline Var<T> make_conv_weight(int64_t cout, int64_t cin, int64_t k, Rng& rng, double scale = 1.0) {
    Tensor<T> w(Shape{cout, cin, k, k});
    const double bound = scale / std::sqrt(static_cast<double>(cin * k * k));
    init_uniform(w, rng, bound);
    return Var<T>(std::move(w), true);
}

template <typename T>
inline Var<T> make_bias(int64_t cout) {
    return Var<T>(Tensor<T>::zeros(Shape{1, cout, 1, 1}), true);
}

template <typename T>
struct Conv3x3 {
    Var<T> w, b;

    Conv3x3() = default;
    Conv3x3(int64_t cin, int64_t cout, Rng& rng, double scale = 1.0)
        : w(make_conv_weight<T>(cout, cin, 3, rng, scale)), b(make_bias<T>(cout)) {}

    Var<T> operator()(Tape<T>* tape, const Var<T>& x) const { return conv2d(tape, x, w, b, 1); }

    void collect(const std::string& prefix, NamedParams<T>& out) {
        out.emplace_back(prefix + ".weight", &w);
        out.emplace_back(prefix + ".bias", &b);
    }
};

// x + conv(relu(conv(x))), shape preserving
template <typename T>
struct ResidualBlock {
    Conv3x3<T> c1, c2;

    ResidualBlock() = default;
    ResidualBlock(int64_t channels, Rng& rng) : c1(channels, channels, rng), c2(channels, channels, rng) {}

    Var<T> forward(Tape<T>* tape, const Var<T>& x) const {
        return add(tape, x, c2(tape, relu(tape, c1(tape, x))));
    }

    void collect(const std::string& prefix, NamedParams<T>& out) {
        c1.collect(prefix + ".conv1", out);
        c2.collect(prefix + ".conv2", out);
    }
};

template <typename T>
struct ResidualStack {
    std::vector<ResidualBlock<T>> blocks;

    ResidualStack() = default;
    ResidualStack(int64_t count, int64_t channels, Rng& rng) {
        blocks.reserve(static_cast<std::size_t>(count));
        for (int64_t i = 0; i < count; ++i) blocks.emplace_back(channels, rng);
    }

    Var<T> forward(Tape<T>* tape, Var<T> x) const {
        for (const auto& blk : blocks) x = blk.forward(tape, x);
        return x;
    }

    void collect(const std::string& prefix, NamedParams<T>& out) {
        for (std::size_t i = 0; i < blocks.size(); ++i)
            blocks[i].collect(prefix + ".block" + std::to_string(i), out);
    }
};

}  // namespace uve

#endif  // UVE_MODEL_LAYERS_HPP_
