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

#ifndef UVE_DATA_DATASET_HPP_
#define UVE_DATA_DATASET_HPP_

#include <algorithm>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "uve/core/ops.hpp"
#include "uve/data/degradation.hpp"
#include "uve/data/image_io.hpp"
#include "uve/data/synthetic.hpp"

namespace uve {

namespace fs = std::filesystem;

// On-disk layout: root/<split>/<clip_id>/raw/%06d.png and .../gt/%06d.png,
// optional meta.json with {R_q, G_q, cast}.

struct ClipMeta {
    std::optional<double> r_q;
    std::optional<double> g_q;
    std::optional<std::string> cast;
};

struct ClipPair {
    std::string clip_id;
    std::vector<std::string> raw_frames;
    std::vector<std::string> gt_frames;
    ClipMeta meta;
    int64_t height = 0;
    int64_t width = 0;

    int64_t frame_count() const { return static_cast<int64_t>(raw_frames.size()); }
};

struct DatasetLoadResult {
    std::vector<ClipPair> clips;  // valid clips, sorted by clip_id
    std::vector<std::pair<std::string, std::string>> errors;  // clip_id -> diagnostic
    std::vector<std::string> warnings;
};

namespace detail {
inline std::vector<std::string> list_pngs(const fs::path& dir) {
    std::vector<std::string> out;
    if (!fs::is_directory(dir)) return out;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".png") out.push_back(e.path().string());
    std::sort(out.begin(), out.end());
    return out;
}
}  // namespace detail

inline DatasetLoadResult load_dataset(const std::string& root, const std::string& split) {
    DatasetLoadResult res;
    const fs::path base = fs::path(root) / split;
    if (!fs::is_directory(base)) {
        res.warnings.push_back("dataset: no such split directory " + base.string());
        return res;
    }
    std::vector<fs::path> clip_dirs;
    for (const auto& e : fs::directory_iterator(base))
        if (e.is_directory()) clip_dirs.push_back(e.path());
    std::sort(clip_dirs.begin(), clip_dirs.end());
    if (clip_dirs.empty()) res.warnings.push_back("dataset: split '" + split + "' is empty");

    for (const fs::path& dir : clip_dirs) {
        const std::string id = dir.filename().string();
        ClipPair clip;
        clip.clip_id = id;
        clip.raw_frames = detail::list_pngs(dir / "raw");
        clip.gt_frames = detail::list_pngs(dir / "gt");
        if (clip.raw_frames.empty()) {
            res.errors.emplace_back(id, "missing or empty raw/ directory");
            continue;
        }
        if (clip.gt_frames.empty()) {
            res.errors.emplace_back(id, "missing or empty gt/ directory (no ground-truth counterpart)");
            continue;
        }
        if (clip.raw_frames.size() != clip.gt_frames.size()) {
            res.errors.emplace_back(id, "frame-count mismatch: raw has " +
                                            std::to_string(clip.raw_frames.size()) + ", gt has " +
                                            std::to_string(clip.gt_frames.size()));
            continue;
        }
        bool ok = true;
        int64_t h0 = 0, w0 = 0;
        for (std::size_t i = 0; i < clip.raw_frames.size() && ok; ++i) {
            int64_t h = 0, w = 0;
            for (const std::string* f : {&clip.raw_frames[i], &clip.gt_frames[i]}) {
                if (!read_png_size(*f, h, w)) {
                    res.errors.emplace_back(id, "unreadable image " + *f);
                    ok = false;
                    break;
                }
                if (i == 0 && f == &clip.raw_frames[i]) {
                    h0 = h;
                    w0 = w;
                } else if (h != h0 || w != w0) {
                    res.errors.emplace_back(id, "resolution mismatch at " + *f + ": " +
                                                    std::to_string(w) + "x" + std::to_string(h) +
                                                    " vs " + std::to_string(w0) + "x" +
                                                    std::to_string(h0));
                    ok = false;
                    break;
                }
            }
        }
        if (!ok) continue;
        clip.height = h0;
        clip.width = w0;

        const fs::path meta_path = dir / "meta.json";
        if (fs::is_regular_file(meta_path)) {
            try {
                std::ifstream is(meta_path);
                nlohmann::json j;
                is >> j;
                if (j.contains("R_q")) clip.meta.r_q = j["R_q"].get<double>();
                if (j.contains("G_q")) clip.meta.g_q = j["G_q"].get<double>();
                if (j.contains("cast")) clip.meta.cast = j["cast"].get<std::string>();
            } catch (const std::exception& e) {
                res.errors.emplace_back(id, std::string("bad meta.json: ") + e.what());
                continue;
            }
        }
        res.clips.push_back(std::move(clip));
    }
    std::sort(res.clips.begin(), res.clips.end(),
              [](const ClipPair& a, const ClipPair& b) { return a.clip_id < b.clip_id; });
    return res;
}

// Temporal window indices around `center` with reflection at clip
// boundaries (-1 -> 1, L -> L-2). Training-time sampling requires t < L.
inline std::vector<int64_t> window_indices(int64_t length, int64_t center, int64_t t) {
    require(length >= 1, "window: empty clip");
    require(center >= 0 && center < length,
            "window: center " + std::to_string(center) + " out of range [0, " +
                std::to_string(length) + ")");
    if (t >= length)
        throw ConfigError("window: temporal radius " + std::to_string(t) +
                          " requires clips of more than " + std::to_string(t) + " frames, clip has " +
                          std::to_string(length));
    std::vector<int64_t> idx;
    idx.reserve(static_cast<std::size_t>(2 * t + 1));
    for (int64_t i = center - t; i <= center + t; ++i) {
        int64_t j = i;
        if (j < 0) j = -j;
        if (j >= length) j = 2 * length - 2 - j;
        idx.push_back(j);
    }
    return idx;
}

template <typename T>
struct InMemoryClip {
    std::string clip_id;
    std::vector<Tensor<T>> raw;
    std::vector<Tensor<T>> gt;
    int64_t frame_count() const { return static_cast<int64_t>(raw.size()); }
};

template <typename T>
InMemoryClip<T> load_clip(const ClipPair& clip) {
    InMemoryClip<T> out;
    out.clip_id = clip.clip_id;
    out.raw.reserve(clip.raw_frames.size());
    out.gt.reserve(clip.gt_frames.size());
    for (const std::string& f : clip.raw_frames) out.raw.push_back(read_png<T>(f));
    for (const std::string& f : clip.gt_frames) out.gt.push_back(read_png<T>(f));
    return out;
}

template <typename T>
std::vector<InMemoryClip<T>> load_clips(const std::vector<ClipPair>& clips) {
    std::vector<InMemoryClip<T>> out;
    out.reserve(clips.size());
    for (const ClipPair& c : clips) out.push_back(load_clip<T>(c));
    return out;
}

// (raw window, gt window) aligned by shared indices.
template <typename T>
std::pair<std::vector<Tensor<T>>, std::vector<Tensor<T>>> sample_window(const InMemoryClip<T>& clip,
                                                                        int64_t center, int64_t t) {
    const auto idx = window_indices(clip.frame_count(), center, t);
    std::vector<Tensor<T>> raw, gt;
    raw.reserve(idx.size());
    gt.reserve(idx.size());
    for (int64_t i : idx) {
        raw.push_back(clip.raw[static_cast<std::size_t>(i)]);
        gt.push_back(clip.gt[static_cast<std::size_t>(i)]);
    }
    return {std::move(raw), std::move(gt)};
}

template <typename T>
struct WindowBatch {
    Tensor<T> raw;     // (B * (2t+1), 3, P, P)
    Tensor<T> gt;      // same
    Tensor<T> aux_gt;  // (B, 3, P/4, P/4), x4 downsample of middle gt frames
    int64_t n_windows = 0;
};

// Uniform (clip, center) sampling with a shared random aligned crop per
// window: raw/gt and all frames of a window use identical crop offsets.
template <typename T>
class WindowSampler {
public:
    WindowSampler(const std::vector<InMemoryClip<T>>* clips, int64_t t, int64_t patch, uint64_t seed)
        : clips_(clips), t_(t), patch_(patch), rng_(seed) {
        if (!clips_ || clips_->empty()) throw ConfigError("sampler: empty dataset");
        for (const auto& c : *clips_) {
            if (c.frame_count() <= t_)
                throw ConfigError("sampler: clip '" + c.clip_id + "' has " +
                                  std::to_string(c.frame_count()) +
                                  " frames, needs more than t=" + std::to_string(t_));
        }
    }

    WindowBatch<T> next_batch(int64_t n_windows) {
        std::vector<Tensor<T>> raws, gts, auxes;
        for (int64_t b = 0; b < n_windows; ++b) {
            const auto& clip = (*clips_)[static_cast<std::size_t>(rng_.uniform_int(
                static_cast<int64_t>(clips_->size())))];
            const int64_t center = rng_.uniform_int(clip.frame_count());
            auto [raw, gt] = sample_window(clip, center, t_);
            const Shape fs = raw[0].shape();
            const int64_t ph = effective_patch(fs.h);
            const int64_t pw = effective_patch(fs.w);
            const int64_t oy = fs.h > ph ? rng_.uniform_int(fs.h - ph + 1) : 0;
            const int64_t ox = fs.w > pw ? rng_.uniform_int(fs.w - pw + 1) : 0;
            for (auto& f : raw) raws.push_back(crop(f, oy, ox, ph, pw));
            for (std::size_t i = 0; i < gt.size(); ++i) {
                Tensor<T> g = crop(gt[i], oy, ox, ph, pw);
                if (static_cast<int64_t>(i) == t_)
                    auxes.push_back(bilinear_resize(g, ph / 4, pw / 4));
                gts.push_back(std::move(g));
            }
        }
        WindowBatch<T> batch;
        batch.raw = stack_frames(raws);
        batch.gt = stack_frames(gts);
        batch.aux_gt = stack_frames(auxes);
        batch.n_windows = n_windows;
        return batch;
    }

private:
    int64_t effective_patch(int64_t extent) const {
        // largest multiple of 16 that fits both the requested patch and the frame
        int64_t p = std::min(patch_, (extent / 16) * 16);
        if (p < 16)
            throw ConfigError("sampler: frame extent " + std::to_string(extent) +
                              " too small for a 16-aligned patch");
        return p;
    }

    static Tensor<T> crop(const Tensor<T>& f, int64_t oy, int64_t ox, int64_t ph, int64_t pw) {
        const Shape s = f.shape();
        Tensor<T> out(Shape{1, s.c, ph, pw}, f.range());
        for (int64_t c = 0; c < s.c; ++c)
            for (int64_t y = 0; y < ph; ++y)
                std::copy(f.data() + (c * s.h + oy + y) * s.w + ox,
                          f.data() + (c * s.h + oy + y) * s.w + ox + pw,
                          out.data() + (c * ph + y) * pw);
        return out;
    }

    const std::vector<InMemoryClip<T>>* clips_;
    int64_t t_;
    int64_t patch_;
    Rng rng_;
};

// Writes a clip pair to the on-disk layout.
template <typename T>
void write_clip(const std::string& root, const std::string& split, const std::string& clip_id,
                const std::vector<Tensor<T>>& raw, const std::vector<Tensor<T>>& gt,
                const ClipMeta& meta = {}) {
    const fs::path dir = fs::path(root) / split / clip_id;
    fs::create_directories(dir / "raw");
    fs::create_directories(dir / "gt");
    char name[32];
    for (std::size_t i = 0; i < raw.size(); ++i) {
        std::snprintf(name, sizeof(name), "%06zu.png", i);
        write_png((dir / "raw" / name).string(), raw[i]);
    }
    for (std::size_t i = 0; i < gt.size(); ++i) {
        std::snprintf(name, sizeof(name), "%06zu.png", i);
        write_png((dir / "gt" / name).string(), gt[i]);
    }
    if (meta.r_q || meta.g_q || meta.cast) {
        nlohmann::json j;
        if (meta.r_q) j["R_q"] = *meta.r_q;
        if (meta.g_q) j["G_q"] = *meta.g_q;
        if (meta.cast) j["cast"] = *meta.cast;
        std::ofstream os(dir / "meta.json");
        os << j.dump(2) << "\n";
    }
}

struct SynthSpec {
    int64_t clips = 4;
    int64_t frames = 10;
    int64_t height = 128;
    int64_t width = 128;
    std::string split = "train";
};

// Generates a synthetic paired dataset: procedural (or provided) clean clips
// as GT, preset-sampled degradations as raw. Writes a manifest recording
// every DegradationParams and seed for full reproducibility.
template <typename T>
nlohmann::json make_synthetic_dataset(const std::string& root, const SynthSpec& spec,
                                      const std::vector<DegradationPreset>& presets, uint64_t seed,
                                      const std::vector<std::vector<Tensor<T>>>* clean_clips = nullptr) {
    Rng master(seed);
    nlohmann::json manifest;
    manifest["seed"] = seed;
    manifest["split"] = spec.split;
    manifest["clips"] = nlohmann::json::array();
    for (int64_t i = 0; i < spec.clips; ++i) {
        const uint64_t clip_seed = master.fork();
        Rng rng(clip_seed);
        std::vector<Tensor<T>> clean;
        if (clean_clips) {
            clean = (*clean_clips)[static_cast<std::size_t>(i % static_cast<int64_t>(clean_clips->size()))];
        } else {
            clean = make_clean_clip<T>(spec.frames, spec.height, spec.width, rng);
        }
        const DegradationPreset& preset =
            presets[static_cast<std::size_t>(i % static_cast<int64_t>(presets.size()))];
        const DegradationParams params =
            sample_params(preset, static_cast<int64_t>(clean.size()), rng);
        std::vector<Tensor<T>> raw = degrade_clip(clean, params, clip_seed);
        char id[32];
        std::snprintf(id, sizeof(id), "clip%04lld", static_cast<long long>(i));
        ClipMeta meta;
        meta.cast = params.cast;
        write_clip(root, spec.split, id, raw, clean, meta);
        manifest["clips"].push_back(
            {{"clip_id", id}, {"seed", clip_seed}, {"params", params.to_json()}});
    }
    const fs::path mpath = fs::path(root) / (spec.split + "_manifest.json");
    std::ofstream os(mpath);
    os << manifest.dump(2) << "\n";
    return manifest;
}

}  // namespace uve

#endif  // UVE_DATA_DATASET_HPP_
