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

#ifndef UVE_EVAL_BENCHMARK_HPP_
#define UVE_EVAL_BENCHMARK_HPP_

#include <algorithm>
#include <chrono>
#include <new>
#include <string>
#include <vector>

#include "uve/infer/engine.hpp"

namespace uve {

struct DeviceProfile {
    std::string name = "cpu";
    std::size_t memory_budget_bytes = 0;  // 0: unlimited
};

struct BenchResult {
    bool ok = true;
    std::string error;
    double seconds_per_frame = 0.0;  // median over timed windows
    double peak_memory_gib = 0.0;    // peak live tensor bytes during timing
    int64_t windows_timed = 0;
};

// Times repeated single-window inference on a synthetic in-memory clip
// (timing excludes disk I/O). One warm-up window runs before measurement.
template <typename T>
BenchResult benchmark_inference(const UveNet<T>& model, int64_t height, int64_t width,
                                int64_t windows = 10, const DeviceProfile& profile = {},
                                uint64_t seed = 7) {
    BenchResult res;
    if (windows < 10) windows = 10;
    try {
        const int64_t wl = model.config().window_length();
        Rng rng(seed);
        std::vector<Tensor<T>> frames;
        for (int64_t i = 0; i < wl; ++i) {
            Tensor<T> f(Shape{1, 3, height, width}, ValueRange::pixel);
            for (int64_t j = 0; j < f.size(); ++j) f[j] = static_cast<T>(rng.uniform());
            frames.push_back(std::move(f));
        }
        InferencePlan p = plan(wl, model.config().temporal_radius, height, width,
                               profile.memory_budget_bytes, &model.config());

        (void)enhance_clip(model, frames, p);  // warm-up

        MemoryMeter::reset_peak();
        std::vector<double> times;
        for (int64_t i = 0; i < windows; ++i) {
            const auto t0 = std::chrono::steady_clock::now();
            EnhanceResult<T> out = enhance_clip(model, frames, p);
            const auto t1 = std::chrono::steady_clock::now();
            times.push_back(std::chrono::duration<double>(t1 - t0).count() /
                            static_cast<double>(out.frames.size()));
        }
        std::sort(times.begin(), times.end());
        res.seconds_per_frame = times[times.size() / 2];
        res.peak_memory_gib =
            static_cast<double>(MemoryMeter::peak_bytes()) / (1024.0 * 1024.0 * 1024.0);
        res.windows_timed = windows;
    } catch (const std::bad_alloc&) {
        res.ok = false;
        res.error = "out of memory during benchmark";
    }
    return res;
}

}  // namespace uve

#endif  // UVE_EVAL_BENCHMARK_HPP_
