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

#ifndef UVE_INFER_ENGINE_HPP_
#define UVE_INFER_ENGINE_HPP_

#include <optional>
#include <utility>
#include <vector>

#include "uve/model/network.hpp"

namespace uve {

// Frame index reflection with multi-bounce at both clip ends; any integer
// maps into [0, length).
inline int64_t reflect_index(int64_t i, int64_t length) {
    require(length >= 1, "reflect_index: empty clip");
    if (length == 1) return 0;
    const int64_t period = 2 * length - 2;
    int64_t m = i % period;
    if (m < 0) m += period;
    return m < length ? m : period - m;
}

struct PlannedWindow {
    int64_t center = 0;
    std::vector<int64_t> members;               // reflected frame indices, size 2t+1
    std::vector<std::pair<int64_t, int64_t>> emits;  // (window position, output frame)
};

struct TileSpec {
    int64_t tile = 256;  // core tile edge (multiple of 16)
    int64_t halo = 16;   // context extension per side; blended overlap is 2*halo
};

struct InferencePlan {
    int64_t clip_length = 0;
    int64_t temporal_radius = 0;
    bool stride1 = false;
    std::vector<PlannedWindow> windows;
    std::optional<TileSpec> tiles;

    int64_t window_count() const { return static_cast<int64_t>(windows.size()); }
};

// Rough per-pixel activation footprint of one inference window, used to
// decide spatial tiling against a memory budget.
inline std::size_t estimate_window_bytes(const ModelConfig& cfg, int64_t h, int64_t w,
                                         std::size_t scalar_bytes) {
    const int64_t wl = cfg.window_length();
    const int64_t per_pixel_floats = 3 + 12 * cfg.base_channels;
    return static_cast<std::size_t>(wl * h * w * per_pixel_floats) * scalar_bytes;
}

// Non-overlapping temporal cover with stride 2t+1; a trailing remainder is
// handled by a final window anchored at the clip end that emits only the
// not-yet-covered frames. stride1 instead slides a window per frame and
// emits the center only.
inline InferencePlan plan(int64_t clip_length, int64_t t, int64_t frame_h = 0, int64_t frame_w = 0,
                          std::size_t memory_budget_bytes = 0, const ModelConfig* cfg = nullptr,
                          bool force_tile = false, bool stride1 = false) {
    require(clip_length >= 1, "plan: clip length must be >= 1");
    require(t >= 0, "plan: temporal radius must be >= 0");
    InferencePlan p;
    p.clip_length = clip_length;
    p.temporal_radius = t;
    p.stride1 = stride1;
    const int64_t wl = 2 * t + 1;

    auto make_window = [&](int64_t center) {
        PlannedWindow win;
        win.center = center;
        for (int64_t i = center - t; i <= center + t; ++i)
            win.members.push_back(reflect_index(i, clip_length));
        return win;
    };

    if (stride1) {
        for (int64_t f = 0; f < clip_length; ++f) {
            PlannedWindow win = make_window(f);
            win.emits.emplace_back(t, f);
            p.windows.push_back(std::move(win));
        }
    } else {
        std::vector<bool> covered(static_cast<std::size_t>(clip_length), false);
        const int64_t full = clip_length / wl;
        for (int64_t j = 0; j < full; ++j) {
            PlannedWindow win = make_window(j * wl + t);
            for (int64_t pos = 0; pos < wl; ++pos) {
                win.emits.emplace_back(pos, win.members[static_cast<std::size_t>(pos)]);
                covered[static_cast<std::size_t>(win.members[static_cast<std::size_t>(pos)])] = true;
            }
            p.windows.push_back(std::move(win));
        }
        if (full * wl < clip_length || full == 0) {
            PlannedWindow win = make_window(std::max<int64_t>(0, clip_length - 1 - t));
            // emit each uncovered frame from the member position closest to center
            for (int64_t f = 0; f < clip_length; ++f) {
                if (covered[static_cast<std::size_t>(f)]) continue;
                int64_t best_pos = -1;
                for (int64_t pos = 0; pos < wl; ++pos) {
                    if (win.members[static_cast<std::size_t>(pos)] != f) continue;
                    if (best_pos < 0 || std::abs(pos - t) < std::abs(best_pos - t)) best_pos = pos;
                }
                require(best_pos >= 0, "plan: remainder window does not contain frame " +
                                           std::to_string(f));
                win.emits.emplace_back(best_pos, f);
            }
            p.windows.push_back(std::move(win));
        }
    }

    if (cfg && frame_h > 0 && frame_w > 0) {
        const bool too_big = memory_budget_bytes > 0 &&
                             estimate_window_bytes(*cfg, frame_h, frame_w, sizeof(float)) >
                                 memory_budget_bytes;
        if (force_tile || too_big) {
            TileSpec ts;
            if (memory_budget_bytes > 0) {
                int64_t tile = 256;
                while (tile > 64 &&
                       estimate_window_bytes(*cfg, tile + 2 * ts.halo, tile + 2 * ts.halo,
                                             sizeof(float)) > memory_budget_bytes)
                    tile -= 64;
                ts.tile = std::max<int64_t>(64, tile);
            }
            p.tiles = ts;
        }
    }
    return p;
}

namespace detail {

// Reflective pad (no edge repeat) to the next multiple of `mult`.
template <typename T>
Tensor<T> pad_reflect_to_multiple(const Tensor<T>& x, int64_t mult, int64_t& pad_h, int64_t& pad_w) {
    const Shape s = x.shape();
    pad_h = (mult - s.h % mult) % mult;
    pad_w = (mult - s.w % mult) % mult;
    if (pad_h == 0 && pad_w == 0) return x;
    Tensor<T> out(Shape{s.n, s.c, s.h + pad_h, s.w + pad_w}, x.range());
    for (int64_t n = 0; n < s.n; ++n)
        for (int64_t c = 0; c < s.c; ++c)
            for (int64_t y = 0; y < s.h + pad_h; ++y) {
                const int64_t sy = reflect_index(y, s.h);
                for (int64_t x_ = 0; x_ < s.w + pad_w; ++x_)
                    out.at(n, c, y, x_) = x.at(n, c, sy, reflect_index(x_, s.w));
            }
    return out;
}

template <typename T>
Tensor<T> crop_spatial(const Tensor<T>& x, int64_t y0, int64_t x0, int64_t h, int64_t w) {
    const Shape s = x.shape();
    Tensor<T> out(Shape{s.n, s.c, h, w}, x.range());
    for (int64_t n = 0; n < s.n; ++n)
        for (int64_t c = 0; c < s.c; ++c)
            for (int64_t y = 0; y < h; ++y)
                std::copy(x.data() + ((n * s.c + c) * s.h + y0 + y) * s.w + x0,
                          x.data() + ((n * s.c + c) * s.h + y0 + y) * s.w + x0 + w,
                          out.data() + ((n * s.c + c) * h + y) * w);
    return out;
}

// linear feather: 1 inside the core, ramping down across the halo strips
inline double feather_weight(int64_t p, int64_t core0, int64_t core1, int64_t ctx0, int64_t ctx1) {
    if (p >= core0 && p < core1) return 1.0;
    if (p < core0)
        return static_cast<double>(p - ctx0 + 1) / static_cast<double>(core0 - ctx0 + 1);
    return static_cast<double>(ctx1 - p) / static_cast<double>(ctx1 - core1 + 1);
}

}  // namespace detail

struct EnhanceOptions {
    bool force_tile = false;
    bool stride1 = false;
    std::size_t memory_budget_bytes = 0;  // 0: never tile unless forced
};

template <typename T>
struct EnhanceResult {
    std::vector<Tensor<T>> frames;
    int64_t aux_activations = 0;
    int64_t windows_run = 0;
};

// Runs one planned window over full frames (the non-tiled path).
template <typename T>
Tensor<T> run_window(const UveNet<T>& model, const std::vector<Tensor<T>>& padded,
                     const PlannedWindow& win) {
    std::vector<Tensor<T>> frames;
    frames.reserve(win.members.size());
    for (int64_t m : win.members) frames.push_back(padded[static_cast<std::size_t>(m)]);
    WindowOutput<T> out = model.forward(nullptr, Var<T>(stack_frames(frames)),
                                        1);
    return out.enhanced.value();
}

// Whole-clip enhancement: temporal windows per the plan, one auxiliary
// activation per window, optional spatial tiling with feathered overlap
// blending. Frames whose size is not a multiple of 16 are reflect-padded
// and cropped back.
template <typename T>
EnhanceResult<T> enhance_clip(const UveNet<T>& model, const std::vector<Tensor<T>>& clip,
                              const InferencePlan& plan) {
    require(!clip.empty(), "enhance_clip: empty clip");
    require(plan.clip_length == static_cast<int64_t>(clip.size()),
            "enhance_clip: plan is for " + std::to_string(plan.clip_length) + " frames, clip has " +
                std::to_string(clip.size()));
    require(plan.temporal_radius == model.config().temporal_radius,
            "enhance_clip: plan t=" + std::to_string(plan.temporal_radius) +
                " != model t=" + std::to_string(model.config().temporal_radius));
    const Shape fs = clip[0].shape();

    int64_t pad_h = 0, pad_w = 0;
    std::vector<Tensor<T>> padded;
    padded.reserve(clip.size());
    for (const auto& f : clip) {
        require(f.shape() == fs, "enhance_clip: inconsistent frame shapes in clip");
        int64_t ph = 0, pw = 0;
        padded.push_back(detail::pad_reflect_to_multiple(f, 16, ph, pw));
        pad_h = ph;
        pad_w = pw;
    }

    const int64_t H = fs.h + pad_h, W = fs.w + pad_w;
    EnhanceResult<T> res;
    res.frames.resize(clip.size());
    model.reset_aux_activations();

    for (const PlannedWindow& win : plan.windows) {
        Tensor<T> enhanced;  // (2t+1, 3, H, W)
        if (!plan.tiles) {
            enhanced = run_window(model, padded, win);
        } else {
            const TileSpec ts = *plan.tiles;
            enhanced = Tensor<T>(Shape{static_cast<int64_t>(win.members.size()), 3, H, W});
            Tensor<double> wsum(Shape{1, 1, H, W});
            std::vector<Tensor<T>> members;
            for (int64_t m : win.members) members.push_back(padded[static_cast<std::size_t>(m)]);
            for (int64_t ty0 = 0; ty0 < H; ty0 += ts.tile)
                for (int64_t tx0 = 0; tx0 < W; tx0 += ts.tile) {
                    const int64_t ty1 = std::min(H, ty0 + ts.tile);
                    const int64_t tx1 = std::min(W, tx0 + ts.tile);
                    const int64_t cy0 = std::max<int64_t>(0, ty0 - ts.halo);
                    const int64_t cy1 = std::min(H, ty1 + ts.halo);
                    const int64_t cx0 = std::max<int64_t>(0, tx0 - ts.halo);
                    const int64_t cx1 = std::min(W, tx1 + ts.halo);
                    std::vector<Tensor<T>> tile_frames;
                    for (const auto& m : members)
                        tile_frames.push_back(detail::crop_spatial(m, cy0, cx0, cy1 - cy0, cx1 - cx0));
                    int64_t tph = 0, tpw = 0;
                    for (auto& tf : tile_frames)
                        tf = detail::pad_reflect_to_multiple(tf, 16, tph, tpw);
                    WindowOutput<T> out = model.forward(nullptr, Var<T>(stack_frames(tile_frames)), 1);
                    const Tensor<T>& tout = out.enhanced.value();
                    for (int64_t p = 0; p < static_cast<int64_t>(win.members.size()); ++p)
                        for (int64_t c = 0; c < 3; ++c)
                            for (int64_t y = cy0; y < cy1; ++y) {
                                const double wy = detail::feather_weight(y, ty0, ty1, cy0, cy1);
                                for (int64_t x = cx0; x < cx1; ++x) {
                                    const double wgt =
                                        wy * detail::feather_weight(x, tx0, tx1, cx0, cx1);
                                    enhanced.at(p, c, y, x) += static_cast<T>(
                                        wgt * static_cast<double>(tout.at(p, c, y - cy0, x - cx0)));
                                    if (p == 0 && c == 0) wsum.at(0, 0, y, x) += wgt;
                                }
                            }
                }
            for (int64_t p = 0; p < static_cast<int64_t>(win.members.size()); ++p)
                for (int64_t c = 0; c < 3; ++c)
                    for (int64_t y = 0; y < H; ++y)
                        for (int64_t x = 0; x < W; ++x)
                            enhanced.at(p, c, y, x) =
                                static_cast<T>(enhanced.at(p, c, y, x) / wsum.at(0, 0, y, x));
        }
        for (const auto& [pos, frame] : win.emits) {
            Tensor<T> f = slice_frame(enhanced, pos);
            if (pad_h || pad_w) f = detail::crop_spatial(f, 0, 0, fs.h, fs.w);
            res.frames[static_cast<std::size_t>(frame)] = clamp01(f);
        }
        ++res.windows_run;
    }
    res.aux_activations = model.aux_activations();
    return res;
}

}  // namespace uve

#endif  // UVE_INFER_ENGINE_HPP_
