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

#ifndef UVE_DATA_SYNTHETIC_HPP_
#define UVE_DATA_SYNTHETIC_HPP_

#include <cmath>
#include <vector>

#include "uve/core/rng.hpp"
#include "uve/core/tensor.hpp"

namespace uve {

// Procedural clean clips: a drifting smooth color gradient with soft-edged
// moving blobs. Motion per frame is small, so clips are temporally smooth.
template <typename T>
std::vector<Tensor<T>> make_clean_clip(int64_t frames, int64_t h, int64_t w, Rng& rng) {
    struct Blob {
        double cx, cy, vx, vy, rx, ry;
        double color[3];
    };
    double corner[4][3];
    double corner_v[4][3];
    for (int i = 0; i < 4; ++i)
        for (int c = 0; c < 3; ++c) {
            corner[i][c] = rng.uniform(0.15, 0.9);
            corner_v[i][c] = rng.uniform(-0.004, 0.004);
        }
    const int64_t n_blobs = 3 + rng.uniform_int(4);
    std::vector<Blob> blobs;
    for (int64_t i = 0; i < n_blobs; ++i) {
        Blob b;
        b.cx = rng.uniform(0.1, 0.9) * static_cast<double>(w);
        b.cy = rng.uniform(0.1, 0.9) * static_cast<double>(h);
        b.vx = rng.uniform(-0.8, 0.8);
        b.vy = rng.uniform(-0.8, 0.8);
        b.rx = rng.uniform(0.08, 0.25) * static_cast<double>(w);
        b.ry = rng.uniform(0.08, 0.25) * static_cast<double>(h);
        for (int c = 0; c < 3; ++c) b.color[c] = rng.uniform(0.05, 0.95);
        blobs.push_back(b);
    }

    std::vector<Tensor<T>> clip;
    clip.reserve(static_cast<std::size_t>(frames));
    for (int64_t f = 0; f < frames; ++f) {
        Tensor<T> img(Shape{1, 3, h, w}, ValueRange::pixel);
        for (int64_t y = 0; y < h; ++y) {
            const double fy = static_cast<double>(y) / static_cast<double>(h - 1 > 0 ? h - 1 : 1);
            for (int64_t x = 0; x < w; ++x) {
                const double fx = static_cast<double>(x) / static_cast<double>(w - 1 > 0 ? w - 1 : 1);
                for (int c = 0; c < 3; ++c) {
                    double v = (1 - fy) * ((1 - fx) * corner[0][c] + fx * corner[1][c]) +
                               fy * ((1 - fx) * corner[2][c] + fx * corner[3][c]);
                    for (const Blob& b : blobs) {
                        const double dx = (static_cast<double>(x) - b.cx) / b.rx;
                        const double dy = (static_cast<double>(y) - b.cy) / b.ry;
                        const double a = std::exp(-(dx * dx + dy * dy));
                        v = (1.0 - a) * v + a * b.color[c];
                    }
                    img.at(0, c, y, x) = static_cast<T>(std::min(1.0, std::max(0.0, v)));
                }
            }
        }
        clip.push_back(std::move(img));
        for (int i = 0; i < 4; ++i)
            for (int c = 0; c < 3; ++c) {
                corner[i][c] += corner_v[i][c];
                if (corner[i][c] < 0.05 || corner[i][c] > 0.95) corner_v[i][c] = -corner_v[i][c];
            }
        for (Blob& b : blobs) {
            b.cx += b.vx;
            b.cy += b.vy;
            if (b.cx < 0 || b.cx >= static_cast<double>(w)) b.vx = -b.vx;
            if (b.cy < 0 || b.cy >= static_cast<double>(h)) b.vy = -b.vy;
        }
    }
    return clip;
}

}  // namespace uve

#endif  // UVE_DATA_SYNTHETIC_HPP_
