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

#ifndef UVE_MODEL_NETWORK_HPP_
#define UVE_MODEL_NETWORK_HPP_

#include <atomic>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "uve/model/config.hpp"
#include "uve/model/guidance.hpp"

namespace uve {

// Shape ledger of one forward pass, for inspection and tests.
struct ForwardTrace {
    std::vector<std::pair<std::string, Shape>> entries;
    void record(const std::string& name, const Shape& s) { entries.emplace_back(name, s); }
    const Shape* find(const std::string& name) const {
        for (const auto& [k, v] : entries)
            if (k == name) return &v;
        return nullptr;
    }
};

// Auxiliary branch: enhances the x4-downsampled middle frame and exposes the
// extraction feature M and restoration feature L for kernel generation.
template <typename T>
struct AENet {
    Conv3x3<T> conv_in;
    ResidualStack<T> blocks_m;  // R blocks
    ResidualStack<T> blocks_l;  // R/2 blocks
    Conv3x3<T> conv_out;
    mutable std::atomic<int64_t> activations{0};

    AENet() = default;
    AENet(const ModelConfig& cfg, Rng& rng)
        : conv_in(3, cfg.base_channels, rng),
          blocks_m(cfg.blocks_r, cfg.base_channels, rng),
          blocks_l(cfg.blocks_r2, cfg.base_channels, rng),
          conv_out(cfg.base_channels, 3, rng, 0.1) {}

    AENet(const AENet&) = delete;
    AENet& operator=(const AENet&) = delete;

    struct Output {
        Var<T> p_hat;  // (N, 3, H/4, W/4), unclamped
        Var<T> m;      // (N, C, H/4, W/4)
        Var<T> l;      // (N, C, H/4, W/4)
    };

    Output forward(Tape<T>* tape, const Var<T>& d, bool global_skip) const {
        const Shape ds = d.shape();
        require(ds.c == 3, "aenet: expected 3-channel input, got " + ds.str());
        require(ds.h % 4 == 0 && ds.w % 4 == 0,
                "aenet: input spatial size " + ds.str() +
                    " must be divisible by 4 (required by the guidance path)");
        activations.fetch_add(1);
        Var<T> dprime = conv_in(tape, d);
        Var<T> m = blocks_m.forward(tape, dprime);
        Var<T> l = blocks_l.forward(tape, m);
        Var<T> out = conv_out(tape, l);
        Var<T> p_hat = global_skip ? add(tape, out, d) : out;
        return Output{p_hat, m, l};
    }

    void collect(const std::string& prefix, NamedParams<T>& out) {
        conv_in.collect(prefix + ".conv_in", out);
        blocks_m.collect(prefix + ".m", out);
        blocks_l.collect(prefix + ".l", out);
        conv_out.collect(prefix + ".conv_out", out);
    }
};

// One guidance application site in the main branch: either the dynamic path
// (kernels supplied per window) or a parameter-matched static depthwise
// substitute performing the same unshuffle -> conv -> shuffle transform.
template <typename T>
struct GuidanceSite {
    bool dynamic = true;
    int64_t unshuffle_rate = 4;
    int64_t shuffle_rate = 2;
    Var<T> static_kernel;  // (1, 16C, 3, 3), used when !dynamic

    GuidanceSite() = default;
    GuidanceSite(bool dynamic_, int64_t ru, int64_t rs, int64_t guide_channels, Rng& rng)
        : dynamic(dynamic_), unshuffle_rate(ru), shuffle_rate(rs) {
        if (!dynamic) {
            // start as the identity rearrangement: per-channel delta kernel
            Tensor<T> k = Tensor<T>::zeros(Shape{1, guide_channels, 3, 3});
            for (int64_t c = 0; c < guide_channels; ++c) k.at(0, c, 1, 1) = T(1);
            static_kernel = Var<T>(std::move(k), true);
        }
    }

    Var<T> apply(Tape<T>* tape, const Var<T>& frames, const GuidanceKernels<T>* kernels,
                 const char* name, ForwardTrace* trace) const {
        Var<T> f = pixel_unshuffle(tape, frames, unshuffle_rate);
        if (trace) trace->record(std::string(name) + ".unshuffled", f.shape());
        Var<T> g;
        if (dynamic) {
            require(kernels != nullptr, std::string(name) + ": dynamic kernels missing");
            g = dyn_depthwise3x3(tape, f, kernels->kernels);
        } else {
            g = dyn_depthwise3x3(tape, f, static_kernel);
        }
        if (trace) trace->record(std::string(name) + ".guided", g.shape());
        return pixel_shuffle(tape, g, shuffle_rate);
    }

    void collect(const std::string& prefix, NamedParams<T>& out) {
        if (!dynamic) out.emplace_back(prefix + ".static_kernel", &static_kernel);
    }
};

// Main branch: weight-shared per-frame pipeline guided by kernels from the
// auxiliary branch (or by static substitutes in ablation configurations).
template <typename T>
struct VENet {
    Conv3x3<T> conv_in;
    ResidualStack<T> stack_in;   // R/6 blocks @ C
    GuidanceSite<T> site_e;      // x4 down, x2 up
    Dckg<T> dckg_e;              // present when use_fegm
    ResidualStack<T> stack_mid;  // R/2 blocks @ 4C
    GuidanceSite<T> site_r;      // x2 down, x4 up
    Dckg<T> dckg_r;              // present when use_frgm
    ResidualStack<T> stack_out;  // R/6 blocks @ C
    Conv3x3<T> conv_out;

    VENet() = default;
    VENet(const ModelConfig& cfg, Rng& rng)
        : conv_in(3, cfg.base_channels, rng),
          stack_in(cfg.blocks_r6, cfg.base_channels, rng),
          site_e(cfg.use_fegm, 4, 2, cfg.guidance_channels(), rng),
          stack_mid(cfg.blocks_r2, 4 * cfg.base_channels, rng),
          site_r(cfg.use_frgm, 2, 4, cfg.guidance_channels(), rng),
          stack_out(cfg.blocks_r6, cfg.base_channels, rng),
          conv_out(cfg.base_channels, 3, rng, 0.1) {
        if (cfg.use_fegm) dckg_e = Dckg<T>(cfg.guidance_channels(), cfg.dckg_layers, rng);
        if (cfg.use_frgm) dckg_r = Dckg<T>(cfg.guidance_channels(), cfg.dckg_layers, rng);
    }

    VENet(const VENet&) = delete;
    VENet& operator=(const VENet&) = delete;

    void collect(const std::string& prefix, NamedParams<T>& out) {
        conv_in.collect(prefix + ".conv_in", out);
        stack_in.collect(prefix + ".stack_in", out);
        if (site_e.dynamic) dckg_e.collect(prefix + ".fegm.dckg", out);
        site_e.collect(prefix + ".fegm", out);
        stack_mid.collect(prefix + ".stack_mid", out);
        if (site_r.dynamic) dckg_r.collect(prefix + ".frgm.dckg", out);
        site_r.collect(prefix + ".frgm", out);
        stack_out.collect(prefix + ".stack_out", out);
        conv_out.collect(prefix + ".conv_out", out);
    }
};

template <typename T>
struct WindowOutput {
    Var<T> enhanced;   // (n_windows*(2t+1), 3, H, W), unclamped
    Var<T> aux_pred;   // (n_windows, 3, H/4, W/4), undefined when use_aenet=false
    Tensor<T> aux_in;  // the downsampled middle frames fed to the auxiliary branch
};

// Full model: assembles the two branches over batches of frame windows.
template <typename T>
class UveNet {
public:
    explicit UveNet(const ModelConfig& cfg, uint64_t seed = 0) : cfg_(cfg) {
        cfg_.validate();
        Rng rng(seed);
        if (cfg_.use_aenet) aenet_ = std::make_unique<AENet<T>>(cfg_, rng);
        venet_ = std::make_unique<VENet<T>>(cfg_, rng);
    }

    const ModelConfig& config() const { return cfg_; }
    AENet<T>* aenet() { return aenet_.get(); }
    const AENet<T>* aenet() const { return aenet_.get(); }
    VENet<T>& venet() { return *venet_; }
    const VENet<T>& venet() const { return *venet_; }

    int64_t aux_activations() const { return aenet_ ? aenet_->activations.load() : 0; }
    void reset_aux_activations() const {
        if (aenet_) aenet_->activations.store(0);
    }

    NamedParams<T> named_parameters() {
        NamedParams<T> out;
        if (aenet_) aenet_->collect("aenet", out);
        venet_->collect("venet", out);
        return out;
    }

    // frames: (n_windows * window_length, 3, H, W), windows stored
    // consecutively with the middle frame at offset temporal_radius.
    WindowOutput<T> forward(Tape<T>* tape, const Var<T>& frames, int64_t n_windows,
                            ForwardTrace* trace = nullptr) const {
        const Shape fs = frames.shape();
        const int64_t wl = cfg_.window_length();
        require(n_windows >= 1 && fs.n == n_windows * wl,
                "forward: frame count " + std::to_string(fs.n) + " != windows " +
                    std::to_string(n_windows) + " x window length " + std::to_string(wl));
        require(fs.c == 3, "forward: expected 3-channel frames, got " + fs.str());
        require(fs.h % 16 == 0, "forward: height " + std::to_string(fs.h) +
                                    " not divisible by 16 (required by the guidance path)");
        require(fs.w % 16 == 0, "forward: width " + std::to_string(fs.w) +
                                    " not divisible by 16 (required by the guidance path)");

        WindowOutput<T> out;
        GuidanceKernels<T> ker_e, ker_r;
        if (cfg_.use_aenet) {
            // one auxiliary activation per window, on the downsampled middle frame
            std::vector<Tensor<T>> mids;
            mids.reserve(static_cast<std::size_t>(n_windows));
            for (int64_t wi = 0; wi < n_windows; ++wi) {
                Tensor<T> mid = slice_frame(frames.value(), wi * wl + cfg_.temporal_radius);
                mids.push_back(bilinear_resize(mid, fs.h / 4, fs.w / 4));
            }
            out.aux_in = stack_frames(mids);
            Var<T> d(out.aux_in);
            auto ae = aenet_->forward(tape, d, cfg_.global_skip);
            out.aux_pred = ae.p_hat;
            if (trace) {
                trace->record("M", ae.m.shape());
                trace->record("L", ae.l.shape());
                trace->record("P_hat", ae.p_hat.shape());
            }
            if (cfg_.use_fegm) {
                Var<T> m4 = pixel_unshuffle(tape, ae.m, 4);
                ker_e = GuidanceKernels<T>{venet_->dckg_e.forward(tape, m4), KernelSource::extraction};
                validate_kernels(ker_e, "fegm");
                if (trace) trace->record("kernels_e", ker_e.kernels.shape());
            }
            if (cfg_.use_frgm) {
                Var<T> l4 = pixel_unshuffle(tape, ae.l, 4);
                ker_r = GuidanceKernels<T>{venet_->dckg_r.forward(tape, l4), KernelSource::restoration};
                validate_kernels(ker_r, "frgm");
                if (trace) trace->record("kernels_r", ker_r.kernels.shape());
            }
        }

        Var<T> e = venet_->conv_in(tape, frames);
        if (trace) trace->record("E", e.shape());
        Var<T> x = venet_->stack_in.forward(tape, e);
        x = venet_->site_e.apply(tape, x, cfg_.use_fegm ? &ker_e : nullptr, "fegm", trace);
        if (trace) trace->record("F_e", x.shape());
        x = venet_->stack_mid.forward(tape, x);
        if (trace) trace->record("R", x.shape());
        x = venet_->site_r.apply(tape, x, cfg_.use_frgm ? &ker_r : nullptr, "frgm", trace);
        if (trace) trace->record("F_r", x.shape());
        x = venet_->stack_out.forward(tape, x);
        x = venet_->conv_out(tape, x);
        out.enhanced = cfg_.global_skip ? add(tape, x, frames) : x;
        if (trace) trace->record("Y_hat", out.enhanced.shape());
        return out;
    }

    // Convenience wrapper for a single window given as separate frames.
    WindowOutput<T> forward_window(Tape<T>* tape, const std::vector<Tensor<T>>& window,
                                   ForwardTrace* trace = nullptr) const {
        require(static_cast<int64_t>(window.size()) == cfg_.window_length(),
                "forward_window: expected " + std::to_string(cfg_.window_length()) + " frames, got " +
                    std::to_string(window.size()));
        Var<T> frames(stack_frames(window));
        return forward(tape, frames, 1, trace);
    }

private:
    void validate_kernels(const GuidanceKernels<T>& k, const char* site) const {
        const Shape ks = k.kernels.shape();
        if (ks.c != cfg_.guidance_channels())
            throw ConfigError(std::string(site) + ": guidance kernel channels " +
                              std::to_string(ks.c) + " != 16C = " +
                              std::to_string(cfg_.guidance_channels()));
    }

    ModelConfig cfg_;
    std::unique_ptr<AENet<T>> aenet_;
    std::unique_ptr<VENet<T>> venet_;
};

}  // namespace uve

#endif  // UVE_MODEL_NETWORK_HPP_
