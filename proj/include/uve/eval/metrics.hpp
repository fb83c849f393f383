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

#ifndef UVE_EVAL_METRICS_HPP_
#define UVE_EVAL_METRICS_HPP_

#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "uve/core/tensor.hpp"

namespace uve {

// Metrics are computed on the 0-255 scale: mse_raw is the mean squared
// difference after scaling pixels by 255, psnr = 10*log10(255^2 / mse_raw)
// capped at 100 dB for (near-)zero mse. Reported MSE follows the x10^3
// convention (mse_raw / 1000).

inline constexpr double kPsnrCap = 100.0;

struct FrameMetrics {
    double psnr_db = 0.0;
    double mse_raw = 0.0;
};

struct MetricReport {
    double psnr_db = 0.0;      // mean of per-frame PSNR
    double mse_scaled = 0.0;   // mean of per-frame mse_raw, divided by 10^3
    std::vector<FrameMetrics> per_frame;
    double inference_seconds_per_frame = 0.0;
    double peak_memory_gib = 0.0;
};

template <typename T>
FrameMetrics psnr_mse(const Tensor<T>& pred, const Tensor<T>& target) {
    require(pred.shape() == target.shape(), "psnr_mse: shape mismatch " + pred.shape().str() +
                                                " vs " + target.shape().str());
    require(pred.size() > 0, "psnr_mse: empty frames");
    double acc = 0.0;
    for (int64_t i = 0; i < pred.size(); ++i) {
        const double d = (static_cast<double>(pred[i]) - static_cast<double>(target[i])) * 255.0;
        acc += d * d;
    }
    FrameMetrics m;
    m.mse_raw = acc / static_cast<double>(pred.size());
    m.psnr_db = m.mse_raw < 255.0 * 255.0 * 1e-10 ? kPsnrCap
                                                  : 10.0 * std::log10(255.0 * 255.0 / m.mse_raw);
    if (m.psnr_db > kPsnrCap) m.psnr_db = kPsnrCap;
    return m;
}

template <typename T>
MetricReport metric_report(const std::vector<Tensor<T>>& pred, const std::vector<Tensor<T>>& target) {
    require(pred.size() == target.size(),
            "metric_report: frame count mismatch " + std::to_string(pred.size()) + " vs " +
                std::to_string(target.size()));
    require(!pred.empty(), "metric_report: no frames");
    MetricReport r;
    double psnr_acc = 0.0, mse_acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        FrameMetrics m = psnr_mse(pred[i], target[i]);
        psnr_acc += m.psnr_db;
        mse_acc += m.mse_raw;
        r.per_frame.push_back(m);
    }
    r.psnr_db = psnr_acc / static_cast<double>(pred.size());
    r.mse_scaled = (mse_acc / static_cast<double>(pred.size())) / 1000.0;
    return r;
}

struct BrightnessCurve {
    std::vector<double> per_frame_luma;  // BT.601 luma on the 0-255 scale
    double mean_abs_diff = 0.0;
    double max_jump = 0.0;
};

template <typename T>
double frame_luma(const Tensor<T>& frame) {
    const Shape s = frame.shape();
    require(s.c == 3, "brightness: expected 3-channel frame, got " + s.str());
    const int64_t hw = s.h * s.w;
    double acc = 0.0;
    const T* r = frame.data();
    const T* g = frame.data() + hw;
    const T* b = frame.data() + 2 * hw;
    for (int64_t i = 0; i < hw; ++i)
        acc += 0.299 * static_cast<double>(r[i]) + 0.587 * static_cast<double>(g[i]) +
               0.114 * static_cast<double>(b[i]);
    return acc / static_cast<double>(hw) * 255.0;
}

template <typename T>
BrightnessCurve brightness_curve(const std::vector<Tensor<T>>& frames) {
    require(frames.size() >= 2, "brightness_curve: needs at least 2 frames, got " +
                                    std::to_string(frames.size()));
    BrightnessCurve c;
    for (const auto& f : frames) c.per_frame_luma.push_back(frame_luma(f));
    double acc = 0.0;
    for (std::size_t i = 1; i < c.per_frame_luma.size(); ++i) {
        const double d = std::abs(c.per_frame_luma[i] - c.per_frame_luma[i - 1]);
        acc += d;
        c.max_jump = std::max(c.max_jump, d);
    }
    c.mean_abs_diff = acc / static_cast<double>(c.per_frame_luma.size() - 1);
    return c;
}

inline nlohmann::json report_to_json(const MetricReport& r) {
    return nlohmann::json{{"psnr_db", r.psnr_db},
                          {"mse_scaled", r.mse_scaled},
                          {"frames", r.per_frame.size()},
                          {"inference_seconds_per_frame", r.inference_seconds_per_frame},
                          {"peak_memory_gib", r.peak_memory_gib}};
}

inline void write_per_frame_csv(const std::string& path, const MetricReport& r) {
    std::ofstream os(path);
    if (!os) throw IoError("metrics: cannot open " + path);
    os << "frame,psnr_db,mse_raw,mse_scaled\n";
    for (std::size_t i = 0; i < r.per_frame.size(); ++i)
        os << i << "," << r.per_frame[i].psnr_db << "," << r.per_frame[i].mse_raw << ","
           << r.per_frame[i].mse_raw / 1000.0 << "\n";
}

inline void write_curve_csv(const std::string& path, const BrightnessCurve& c) {
    std::ofstream os(path);
    if (!os) throw IoError("metrics: cannot open " + path);
    os << "frame,luma\n";
    for (std::size_t i = 0; i < c.per_frame_luma.size(); ++i)
        os << i << "," << c.per_frame_luma[i] << "\n";
}

}  // namespace uve

#endif  // UVE_EVAL_METRICS_HPP_
