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

#ifndef UVE_CORE_OPS_HPP_
#define UVE_CORE_OPS_HPP_

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "uve/core/autograd.hpp"
#include "uve/core/tensor.hpp"

namespace uve {

template <typename T>
using MatRM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

namespace detail {

// col layout: (Cin*k*k) rows x (OH*OW) cols, row-major.
template <typename T>
void im2col(const T* x, int64_t cin, int64_t h, int64_t w, int64_t k, int64_t pad,
            int64_t oh, int64_t ow, T* col) {
    for (int64_t ci = 0; ci < cin; ++ci) {
        const T* src_c = x + ci * h * w;
        for (int64_t dy = 0; dy < k; ++dy) {
            for (int64_t dx = 0; dx < k; ++dx) {
                T* dst = col + ((ci * k + dy) * k + dx) * oh * ow;
                for (int64_t oy = 0; oy < oh; ++oy) {
                    int64_t iy = oy + dy - pad;
                    T* row = dst + oy * ow;
                    if (iy < 0 || iy >= h) {
                        std::fill(row, row + ow, T(0));
                        continue;
                    }
                    const T* src = src_c + iy * w;
                    for (int64_t ox = 0; ox < ow; ++ox) {
                        int64_t ix = ox + dx - pad;
                        row[ox] = (ix >= 0 && ix < w) ? src[ix] : T(0);
                    }
                }
            }
        }
    }
}

// scatter-add inverse of im2col
template <typename T>
void col2im(const T* col, int64_t cin, int64_t h, int64_t w, int64_t k, int64_t pad,
            int64_t oh, int64_t ow, T* x) {
    for (int64_t ci = 0; ci < cin; ++ci) {
        T* dst_c = x + ci * h * w;
        for (int64_t dy = 0; dy < k; ++dy) {
            for (int64_t dx = 0; dx < k; ++dx) {
                const T* src = col + ((ci * k + dy) * k + dx) * oh * ow;
                for (int64_t oy = 0; oy < oh; ++oy) {
                    int64_t iy = oy + dy - pad;
                    if (iy < 0 || iy >= h) continue;
                    T* dst = dst_c + iy * w;
                    const T* row = src + oy * ow;
                    for (int64_t ox = 0; ox < ow; ++ox) {
                        int64_t ix = ox + dx - pad;
                        if (ix >= 0 && ix < w) dst[ix] += row[ox];
                    }
                }
            }
        }
    }
}

template <typename T>
std::vector<T>& scratch_buffer(int which) {
    static thread_local std::vector<T> bufs[2];
    return bufs[which];
}

}  // namespace detail

// 2D convolution, stride 1, square kernel, zero padding. w: (Cout, Cin, k, k),
// optional b: (1, Cout, 1, 1).
template <typename T>
Var<T> conv2d(Tape<T>* tape, const Var<T>& x, const Var<T>& w, const Var<T>& b, int64_t pad) {
    const Shape xs = x.shape();
    const Shape ws = w.shape();
    require(ws.h == ws.w, "conv2d: kernel must be square, got " + ws.str());
    require(xs.c == ws.c, "conv2d: input channels " + std::to_string(xs.c) +
                              " != weight channels " + std::to_string(ws.c));
    if (b.defined())
        require(b.shape() == Shape{1, ws.n, 1, 1},
                "conv2d: bias shape " + b.shape().str() + " incompatible with Cout=" + std::to_string(ws.n));
    const int64_t k = ws.h;
    const int64_t oh = xs.h + 2 * pad - k + 1;
    const int64_t ow = xs.w + 2 * pad - k + 1;
    require(oh >= 1 && ow >= 1, "conv2d: spatial input " + xs.str() + " too small for kernel " +
                                    std::to_string(k) + " pad " + std::to_string(pad));

    const int64_t cin = xs.c, cout = ws.n, ckk = cin * k * k, os = oh * ow;
    Var<T> out(Tensor<T>(Shape{xs.n, cout, oh, ow}));
    const T* xp = x.value().data();
    const T* wp = w.value().data();
    T* op = out.value().data();

#pragma omp parallel for schedule(static)
    for (int64_t n = 0; n < xs.n; ++n) {
        std::vector<T>& colbuf = detail::scratch_buffer<T>(0);
        colbuf.resize(static_cast<std::size_t>(ckk * os));
        detail::im2col(xp + n * cin * xs.h * xs.w, cin, xs.h, xs.w, k, pad, oh, ow, colbuf.data());
        Eigen::Map<const MatRM<T>> wm(wp, cout, ckk);
        Eigen::Map<const MatRM<T>> cm(colbuf.data(), ckk, os);
        Eigen::Map<MatRM<T>> om(op + n * cout * os, cout, os);
        om.noalias() = wm * cm;
        if (b.defined()) {
            const T* bp = b.value().data();
            for (int64_t co = 0; co < cout; ++co) {
                T bias = bp[co];
                T* orow = op + (n * cout + co) * os;
                for (int64_t i = 0; i < os; ++i) orow[i] += bias;
            }
        }
    }

    if (tracing(tape, {&x, &w, &b})) {
        out.set_requires_grad(true);
        Var<T> xc = x, wc = w, bc = b, oc = out;
        tape->record([xc, wc, bc, oc, pad, k, oh, ow]() mutable {
            if (!oc.has_grad()) return;
            const Shape xs = xc.shape();
            const int64_t cin = xs.c, cout = wc.shape().n, ckk = cin * k * k, os = oh * ow;
            const T* gp = oc.grad().data();
            const T* xp = xc.value().data();

            if (bc.defined() && bc.requires_grad()) {
                T* dbp = bc.grad().data();
                for (int64_t n = 0; n < xs.n; ++n)
                    for (int64_t co = 0; co < cout; ++co) {
                        const T* grow = gp + (n * cout + co) * os;
                        T acc = 0;
                        for (int64_t i = 0; i < os; ++i) acc += grow[i];
                        dbp[co] += acc;
                    }
            }

            const bool need_dw = wc.requires_grad();
            const bool need_dx = xc.requires_grad();
            std::vector<T> dw_partial;
            if (need_dw) dw_partial.assign(static_cast<std::size_t>(xs.n * cout * ckk), T(0));
            T* dxp = need_dx ? xc.grad().data() : nullptr;

#pragma omp parallel for schedule(static)
            for (int64_t n = 0; n < xs.n; ++n) {
                std::vector<T>& colbuf = detail::scratch_buffer<T>(0);
                colbuf.resize(static_cast<std::size_t>(ckk * os));
                detail::im2col(xp + n * cin * xs.h * xs.w, cin, xs.h, xs.w, k, pad, oh, ow,
                               colbuf.data());
                Eigen::Map<const MatRM<T>> gm(gp + n * cout * os, cout, os);
                Eigen::Map<const MatRM<T>> cm(colbuf.data(), ckk, os);
                if (need_dw) {
                    Eigen::Map<MatRM<T>> dwm(dw_partial.data() + n * cout * ckk, cout, ckk);
                    dwm.noalias() = gm * cm.transpose();
                }
                if (need_dx) {
                    std::vector<T>& dcol = detail::scratch_buffer<T>(1);
                    dcol.resize(static_cast<std::size_t>(ckk * os));
                    Eigen::Map<const MatRM<T>> wm(wc.value().data(), cout, ckk);
                    Eigen::Map<MatRM<T>> dcm(dcol.data(), ckk, os);
                    dcm.noalias() = wm.transpose() * gm;
                    detail::col2im(dcol.data(), cin, xs.h, xs.w, k, pad, oh, ow,
                                   dxp + n * cin * xs.h * xs.w);
                }
            }
            if (need_dw) {
                // fixed n-order reduction keeps backward bit-deterministic
                T* dwp = wc.grad().data();
                for (int64_t n = 0; n < xs.n; ++n) {
                    const T* part = dw_partial.data() + n * cout * ckk;
                    for (int64_t i = 0; i < cout * ckk; ++i) dwp[i] += part[i];
                }
            }
        });
    }
    return out;
}

template <typename T>
Var<T> relu(Tape<T>* tape, const Var<T>& x) {
    Var<T> out(Tensor<T>(x.shape()));
    const T* xp = x.value().data();
    T* op = out.value().data();
    const int64_t sz = x.value().size();
    for (int64_t i = 0; i < sz; ++i) op[i] = xp[i] > T(0) ? xp[i] : T(0);

    if (tracing(tape, {&x})) {
        out.set_requires_grad(true);
        Var<T> xc = x, oc = out;
        tape->record([xc, oc]() mutable {
            if (!oc.has_grad() || !xc.requires_grad()) return;
            const T* xp = xc.value().data();
            const T* gp = oc.grad().data();
            T* dxp = xc.grad().data();
            const int64_t sz = xc.value().size();
            for (int64_t i = 0; i < sz; ++i)
                if (xp[i] > T(0)) dxp[i] += gp[i];
        });
    }
    return out;
}

template <typename T>
Var<T> add(Tape<T>* tape, const Var<T>& a, const Var<T>& b) {
    require(a.shape() == b.shape(),
            "add: shape mismatch " + a.shape().str() + " vs " + b.shape().str());
    Var<T> out(Tensor<T>(a.shape()));
    const T* ap = a.value().data();
    const T* bp = b.value().data();
    T* op = out.value().data();
    const int64_t sz = a.value().size();
    for (int64_t i = 0; i < sz; ++i) op[i] = ap[i] + bp[i];

    if (tracing(tape, {&a, &b})) {
        out.set_requires_grad(true);
        Var<T> ac = a, bc = b, oc = out;
        tape->record([ac, bc, oc]() mutable {
            if (!oc.has_grad()) return;
            const T* gp = oc.grad().data();
            const int64_t sz = oc.value().size();
            if (ac.requires_grad()) {
                T* d = ac.grad().data();
                for (int64_t i = 0; i < sz; ++i) d[i] += gp[i];
            }
            if (bc.requires_grad()) {
                T* d = bc.grad().data();
                for (int64_t i = 0; i < sz; ++i) d[i] += gp[i];
            }
        });
    }
    return out;
}

// x + b with b of shape (1, C, 1, 1) broadcast over count and spatial axes.
template <typename T>
Var<T> bias_add(Tape<T>* tape, const Var<T>& x, const Var<T>& b) {
    const Shape xs = x.shape();
    require(b.shape() == Shape{1, xs.c, 1, 1},
            "bias_add: bias shape " + b.shape().str() + " does not match channels of " + xs.str());
    Var<T> out(Tensor<T>{xs});
    const T* xp = x.value().data();
    const T* bp = b.value().data();
    T* op = out.value().data();
    const int64_t hw = xs.h * xs.w;
    for (int64_t n = 0; n < xs.n; ++n)
        for (int64_t c = 0; c < xs.c; ++c) {
            const T bv = bp[c];
            const T* xr = xp + (n * xs.c + c) * hw;
            T* orow = op + (n * xs.c + c) * hw;
            for (int64_t i = 0; i < hw; ++i) orow[i] = xr[i] + bv;
        }

    if (tracing(tape, {&x, &b})) {
        out.set_requires_grad(true);
        Var<T> xc = x, bc = b, oc = out;
        tape->record([xc, bc, oc]() mutable {
            if (!oc.has_grad()) return;
            const Shape xs = xc.shape();
            const int64_t hw = xs.h * xs.w;
            const T* gp = oc.grad().data();
            if (xc.requires_grad()) {
                T* d = xc.grad().data();
                const int64_t sz = xc.value().size();
                for (int64_t i = 0; i < sz; ++i) d[i] += gp[i];
            }
            if (bc.requires_grad()) {
                T* db = bc.grad().data();
                for (int64_t n = 0; n < xs.n; ++n)
                    for (int64_t c = 0; c < xs.c; ++c) {
                        const T* grow = gp + (n * xs.c + c) * hw;
                        T acc = 0;
                        for (int64_t i = 0; i < hw; ++i) acc += grow[i];
                        db[c] += acc;
                    }
            }
        });
    }
    return out;
}

// Space-to-channel rearrangement: (N, K, H, W) -> (N, K*r*r, H/r, W/r).
template <typename T>
Var<T> pixel_unshuffle(Tape<T>* tape, const Var<T>& x, int64_t r) {
    const Shape xs = x.shape();
    require(r >= 1, "pixel_unshuffle: rate must be positive, got " + std::to_string(r));
    require(xs.h % r == 0, "pixel_unshuffle: height " + std::to_string(xs.h) +
                               " not divisible by r=" + std::to_string(r));
    require(xs.w % r == 0, "pixel_unshuffle: width " + std::to_string(xs.w) +
                               " not divisible by r=" + std::to_string(r));
    const Shape os{xs.n, xs.c * r * r, xs.h / r, xs.w / r};
    Var<T> out(Tensor<T>{os});
    const T* xp = x.value().data();
    T* op = out.value().data();
#pragma omp parallel for schedule(static)
    for (int64_t n = 0; n < xs.n; ++n)
        for (int64_t c = 0; c < xs.c; ++c)
            for (int64_t dy = 0; dy < r; ++dy)
                for (int64_t dx = 0; dx < r; ++dx) {
                    const int64_t co = c * r * r + dy * r + dx;
                    for (int64_t oy = 0; oy < os.h; ++oy) {
                        const T* src = xp + ((n * xs.c + c) * xs.h + oy * r + dy) * xs.w + dx;
                        T* dst = op + ((n * os.c + co) * os.h + oy) * os.w;
                        for (int64_t ox = 0; ox < os.w; ++ox) dst[ox] = src[ox * r];
                    }
                }

    if (tracing(tape, {&x})) {
        out.set_requires_grad(true);
        Var<T> xc = x, oc = out;
        tape->record([xc, oc, r]() mutable {
            if (!oc.has_grad() || !xc.requires_grad()) return;
            const Shape xs = xc.shape();
            const Shape os = oc.shape();
            const T* gp = oc.grad().data();
            T* dxp = xc.grad().data();
            for (int64_t n = 0; n < xs.n; ++n)
                for (int64_t c = 0; c < xs.c; ++c)
                    for (int64_t dy = 0; dy < r; ++dy)
                        for (int64_t dx = 0; dx < r; ++dx) {
                            const int64_t co = c * r * r + dy * r + dx;
                            for (int64_t oy = 0; oy < os.h; ++oy) {
                                T* dst = dxp + ((n * xs.c + c) * xs.h + oy * r + dy) * xs.w + dx;
                                const T* src = gp + ((n * os.c + co) * os.h + oy) * os.w;
                                for (int64_t ox = 0; ox < os.w; ++ox) dst[ox * r] += src[ox];
                            }
                        }
        });
    }
    return out;
}

// Channel-to-space rearrangement: (N, K, H, W) -> (N, K/(r*r), H*r, W*r).
// Exact inverse of pixel_unshuffle at the same rate.
template <typename T>
Var<T> pixel_shuffle(Tape<T>* tape, const Var<T>& x, int64_t r) {
    const Shape xs = x.shape();
    require(r >= 1, "pixel_shuffle: rate must be positive, got " + std::to_string(r));
    require(xs.c % (r * r) == 0, "pixel_shuffle: channel count " + std::to_string(xs.c) +
                                     " not divisible by r^2=" + std::to_string(r * r));
    const Shape os{xs.n, xs.c / (r * r), xs.h * r, xs.w * r};
    Var<T> out(Tensor<T>{os});
    const T* xp = x.value().data();
    T* op = out.value().data();
#pragma omp parallel for schedule(static)
    for (int64_t n = 0; n < xs.n; ++n)
        for (int64_t co = 0; co < os.c; ++co)
            for (int64_t dy = 0; dy < r; ++dy)
                for (int64_t dx = 0; dx < r; ++dx) {
                    const int64_t ci = co * r * r + dy * r + dx;
                    for (int64_t iy = 0; iy < xs.h; ++iy) {
                        const T* src = xp + ((n * xs.c + ci) * xs.h + iy) * xs.w;
                        T* dst = op + ((n * os.c + co) * os.h + iy * r + dy) * os.w + dx;
                        for (int64_t ix = 0; ix < xs.w; ++ix) dst[ix * r] = src[ix];
                    }
                }

    if (tracing(tape, {&x})) {
        out.set_requires_grad(true);
        Var<T> xc = x, oc = out;
        tape->record([xc, oc, r]() mutable {
            if (!oc.has_grad() || !xc.requires_grad()) return;
            const Shape xs = xc.shape();
            const Shape os = oc.shape();
            const T* gp = oc.grad().data();
            T* dxp = xc.grad().data();
            for (int64_t n = 0; n < xs.n; ++n)
                for (int64_t co = 0; co < os.c; ++co)
                    for (int64_t dy = 0; dy < r; ++dy)
                        for (int64_t dx = 0; dx < r; ++dx) {
                            const int64_t ci = co * r * r + dy * r + dx;
                            for (int64_t iy = 0; iy < xs.h; ++iy) {
                                T* dst = dxp + ((n * xs.c + ci) * xs.h + iy) * xs.w;
                                const T* src = gp + ((n * os.c + co) * os.h + iy * r + dy) * os.w + dx;
                                for (int64_t ix = 0; ix < xs.w; ++ix) dst[ix] += src[ix * r];
                            }
                        }
        });
    }
    return out;
}

// Mean pooling to a fixed output grid. Window edges follow
// floor(o*in/out) .. ceil((o+1)*in/out), so inputs smaller than the output
// grid are handled by overlapping windows.
template <typename T>
Var<T> adaptive_avg_pool(Tape<T>* tape, const Var<T>& x, int64_t oh, int64_t ow) {
    const Shape xs = x.shape();
    require(oh >= 1 && ow >= 1, "adaptive_avg_pool: output size must be positive");
    require(xs.h >= 1 && xs.w >= 1, "adaptive_avg_pool: empty spatial input " + xs.str());
    const Shape os{xs.n, xs.c, oh, ow};
    Var<T> out(Tensor<T>{os});
    const T* xp = x.value().data();
    T* op = out.value().data();

    auto win = [](int64_t o, int64_t in, int64_t outn, int64_t& s, int64_t& e) {
        s = (o * in) / outn;
        e = ((o + 1) * in + outn - 1) / outn;
    };

    for (int64_t n = 0; n < xs.n; ++n)
        for (int64_t c = 0; c < xs.c; ++c) {
            const T* src = xp + (n * xs.c + c) * xs.h * xs.w;
            T* dst = op + (n * os.c + c) * oh * ow;
            for (int64_t oy = 0; oy < oh; ++oy) {
                int64_t ys, ye;
                win(oy, xs.h, oh, ys, ye);
                for (int64_t ox = 0; ox < ow; ++ox) {
                    int64_t xs_, xe;
                    win(ox, xs.w, ow, xs_, xe);
                    T acc = 0;
                    for (int64_t y = ys; y < ye; ++y)
                        for (int64_t xx = xs_; xx < xe; ++xx) acc += src[y * xs.w + xx];
                    dst[oy * ow + ox] = acc / static_cast<T>((ye - ys) * (xe - xs_));
                }
            }
        }

    if (tracing(tape, {&x})) {
        out.set_requires_grad(true);
        Var<T> xc = x, oc = out;
        tape->record([xc, oc, oh, ow, win]() mutable {
            if (!oc.has_grad() || !xc.requires_grad()) return;
            const Shape xs = xc.shape();
            const T* gp = oc.grad().data();
            T* dxp = xc.grad().data();
            for (int64_t n = 0; n < xs.n; ++n)
                for (int64_t c = 0; c < xs.c; ++c) {
                    T* dst = dxp + (n * xs.c + c) * xs.h * xs.w;
                    const T* grow = gp + (n * xs.c + c) * oh * ow;
                    for (int64_t oy = 0; oy < oh; ++oy) {
                        int64_t ys, ye;
                        win(oy, xs.h, oh, ys, ye);
                        for (int64_t ox = 0; ox < ow; ++ox) {
                            int64_t xs_, xe;
                            win(ox, xs.w, ow, xs_, xe);
                            const T g = grow[oy * ow + ox] / static_cast<T>((ye - ys) * (xe - xs_));
                            for (int64_t y = ys; y < ye; ++y)
                                for (int64_t xx = xs_; xx < xe; ++xx) dst[y * xs.w + xx] += g;
                        }
                    }
                }
        });
    }
    return out;
}

// Per-channel 3x3 convolution with input-dependent kernels. feat: (N, C, h, w),
// kernels: (Kn, C, 3, 3) with N % Kn == 0; each kernel sample is shared by the
// N/Kn consecutive feature samples of its group. Zero padding, stride 1.
template <typename T>
Var<T> dyn_depthwise3x3(Tape<T>* tape, const Var<T>& feat, const Var<T>& kernels) {
    const Shape fs = feat.shape();
    const Shape ks = kernels.shape();
    if (fs.c != ks.c)
        throw ConfigError("apply_dynamic_depthwise: feature channels " + std::to_string(fs.c) +
                          " != kernel channels " + std::to_string(ks.c));
    require(ks.h == 3 && ks.w == 3, "apply_dynamic_depthwise: kernels must be 3x3, got " + ks.str());
    require(ks.n >= 1 && fs.n % ks.n == 0,
            "apply_dynamic_depthwise: feature count " + std::to_string(fs.n) +
                " not a multiple of kernel count " + std::to_string(ks.n));
    const int64_t group = fs.n / ks.n;
    const int64_t h = fs.h, w = fs.w;
    Var<T> out(Tensor<T>{fs});
    const T* fp = feat.value().data();
    const T* kp = kernels.value().data();
    T* op = out.value().data();

#pragma omp parallel for schedule(static)
    for (int64_t nc = 0; nc < fs.n * fs.c; ++nc) {
        const int64_t n = nc / fs.c, c = nc % fs.c;
        const int64_t kn = n / group;
        const T* src = fp + nc * h * w;
        const T* kk = kp + (kn * fs.c + c) * 9;
        T* dst = op + nc * h * w;
        std::fill(dst, dst + h * w, T(0));
        for (int64_t dy = 0; dy < 3; ++dy)
            for (int64_t dx = 0; dx < 3; ++dx) {
                const T kv = kk[dy * 3 + dx];
                if (kv == T(0)) continue;
                const int64_t y0 = std::max<int64_t>(0, 1 - dy), y1 = std::min(h, h + 1 - dy);
                const int64_t x0 = std::max<int64_t>(0, 1 - dx), x1 = std::min(w, w + 1 - dx);
                for (int64_t y = y0; y < y1; ++y) {
                    const T* s = src + (y + dy - 1) * w + (x0 + dx - 1);
                    T* d = dst + y * w + x0;
                    for (int64_t x = 0; x < x1 - x0; ++x) d[x] += kv * s[x];
                }
            }
    }

    if (tracing(tape, {&feat, &kernels})) {
        out.set_requires_grad(true);
        Var<T> fc = feat, kc = kernels, oc = out;
        tape->record([fc, kc, oc, group]() mutable {
            if (!oc.has_grad()) return;
            const Shape fs = fc.shape();
            const int64_t h = fs.h, w = fs.w;
            const T* gp = oc.grad().data();
            const T* fp = fc.value().data();
            const T* kp = kc.value().data();

            if (fc.requires_grad()) {
                T* dfp = fc.grad().data();
#pragma omp parallel for schedule(static)
                for (int64_t nc = 0; nc < fs.n * fs.c; ++nc) {
                    const int64_t n = nc / fs.c, c = nc % fs.c;
                    const int64_t kn = n / group;
                    const T* kk = kp + (kn * fs.c + c) * 9;
                    const T* grow = gp + nc * h * w;
                    T* drow = dfp + nc * h * w;
                    for (int64_t dy = 0; dy < 3; ++dy)
                        for (int64_t dx = 0; dx < 3; ++dx) {
                            const T kv = kk[dy * 3 + dx];
                            if (kv == T(0)) continue;
                            const int64_t y0 = std::max<int64_t>(0, 1 - dy), y1 = std::min(h, h + 1 - dy);
                            const int64_t x0 = std::max<int64_t>(0, 1 - dx), x1 = std::min(w, w + 1 - dx);
                            for (int64_t y = y0; y < y1; ++y) {
                                T* d = drow + (y + dy - 1) * w + (x0 + dx - 1);
                                const T* g = grow + y * w + x0;
                                for (int64_t x = 0; x < x1 - x0; ++x) d[x] += kv * g[x];
                            }
                        }
                }
            }
            if (kc.requires_grad()) {
                T* dkp = kc.grad().data();
                const int64_t kn_count = kc.shape().n;
                for (int64_t kn = 0; kn < kn_count; ++kn) {
#pragma omp parallel for schedule(static)
                    for (int64_t c = 0; c < fs.c; ++c) {
                        T* dk = dkp + (kn * fs.c + c) * 9;
                        for (int64_t gm = 0; gm < group; ++gm) {
                            const int64_t n = kn * group + gm;
                            const T* src = fp + (n * fs.c + c) * h * w;
                            const T* grow = gp + (n * fs.c + c) * h * w;
                            for (int64_t dy = 0; dy < 3; ++dy)
                                for (int64_t dx = 0; dx < 3; ++dx) {
                                    const int64_t y0 = std::max<int64_t>(0, 1 - dy),
                                                  y1 = std::min(h, h + 1 - dy);
                                    const int64_t x0 = std::max<int64_t>(0, 1 - dx),
                                                  x1 = std::min(w, w + 1 - dx);
                                    T acc = 0;
                                    for (int64_t y = y0; y < y1; ++y) {
                                        const T* s = src + (y + dy - 1) * w + (x0 + dx - 1);
                                        const T* g = grow + y * w + x0;
                                        for (int64_t x = 0; x < x1 - x0; ++x) acc += s[x] * g[x];
                                    }
                                    dk[dy * 3 + dx] += acc;
                                }
                        }
                    }
                }
            }
        });
    }
    return out;
}

// mean over all elements of sqrt((pred - target)^2 + eps^2)
template <typename T>
Var<T> charbonnier_loss(Tape<T>* tape, const Var<T>& pred, const Var<T>& target, T eps) {
    require(pred.shape() == target.shape(), "charbonnier: shape mismatch " + pred.shape().str() +
                                                " vs " + target.shape().str());
    if (!(eps > T(0))) throw ConfigError("charbonnier: eps must be > 0");
    const int64_t sz = pred.value().size();
    const T* pp = pred.value().data();
    const T* tp = target.value().data();
    double acc = 0.0;
    const double e2 = static_cast<double>(eps) * static_cast<double>(eps);
    for (int64_t i = 0; i < sz; ++i) {
        const double d = static_cast<double>(pp[i]) - static_cast<double>(tp[i]);
        acc += std::sqrt(d * d + e2);
    }
    Var<T> out(Tensor<T>::full(Shape{1, 1, 1, 1}, static_cast<T>(acc / static_cast<double>(sz))));

    if (tracing(tape, {&pred, &target})) {
        out.set_requires_grad(true);
        Var<T> pc = pred, tc = target, oc = out;
        tape->record([pc, tc, oc, eps]() mutable {
            if (!oc.has_grad()) return;
            const T g = oc.grad()[0];
            const int64_t sz = pc.value().size();
            const T* pp = pc.value().data();
            const T* tp = tc.value().data();
            const T inv_n = T(1) / static_cast<T>(sz);
            if (pc.requires_grad()) {
                T* dp = pc.grad().data();
                for (int64_t i = 0; i < sz; ++i) {
                    const T d = pp[i] - tp[i];
                    dp[i] += g * inv_n * d / std::sqrt(d * d + eps * eps);
                }
            }
            if (tc.requires_grad()) {
                T* dt = tc.grad().data();
                for (int64_t i = 0; i < sz; ++i) {
                    const T d = pp[i] - tp[i];
                    dt[i] -= g * inv_n * d / std::sqrt(d * d + eps * eps);
                }
            }
        });
    }
    return out;
}

template <typename T>
Var<T> scalar_add(Tape<T>* tape, const Var<T>& a, const Var<T>& b) {
    require(a.value().size() == 1 && b.value().size() == 1, "scalar_add: operands must be scalars");
    return add(tape, a, b);
}

template <typename T>
Var<T> scalar_scale(Tape<T>* tape, const Var<T>& a, T s) {
    require(a.value().size() == 1, "scalar_scale: operand must be scalar");
    Var<T> out(Tensor<T>::full(Shape{1, 1, 1, 1}, a.value()[0] * s));
    if (tracing(tape, {&a})) {
        out.set_requires_grad(true);
        Var<T> ac = a, oc = out;
        tape->record([ac, oc, s]() mutable {
            if (!oc.has_grad() || !ac.requires_grad()) return;
            ac.grad()[0] += oc.grad()[0] * s;
        });
    }
    return out;
}

// ---- non-differentiable tensor utilities ----

template <typename T>
Tensor<T> clamp01(const Tensor<T>& x) {
    Tensor<T> out = x;
    T* p = out.data();
    for (int64_t i = 0; i < out.size(); ++i) p[i] = std::min(T(1), std::max(T(0), p[i]));
    out.set_range(ValueRange::pixel);
    return out;
}

// Bilinear resize with the half-pixel (corner-aligned-off) convention.
template <typename T>
Tensor<T> bilinear_resize(const Tensor<T>& x, int64_t oh, int64_t ow) {
    const Shape xs = x.shape();
    require(oh >= 1 && ow >= 1, "bilinear_resize: output size must be positive");
    Tensor<T> out(Shape{xs.n, xs.c, oh, ow}, x.range());
    const double sy = static_cast<double>(xs.h) / static_cast<double>(oh);
    const double sx = static_cast<double>(xs.w) / static_cast<double>(ow);
    for (int64_t n = 0; n < xs.n; ++n)
        for (int64_t c = 0; c < xs.c; ++c) {
            const T* src = x.data() + (n * xs.c + c) * xs.h * xs.w;
            T* dst = out.data() + (n * xs.c + c) * oh * ow;
            for (int64_t oy = 0; oy < oh; ++oy) {
                const double fy = (static_cast<double>(oy) + 0.5) * sy - 0.5;
                int64_t y0 = static_cast<int64_t>(std::floor(fy));
                const double wy = fy - static_cast<double>(y0);
                const int64_t y0c = std::clamp<int64_t>(y0, 0, xs.h - 1);
                const int64_t y1c = std::clamp<int64_t>(y0 + 1, 0, xs.h - 1);
                for (int64_t ox = 0; ox < ow; ++ox) {
                    const double fx = (static_cast<double>(ox) + 0.5) * sx - 0.5;
                    int64_t x0 = static_cast<int64_t>(std::floor(fx));
                    const double wx = fx - static_cast<double>(x0);
                    const int64_t x0c = std::clamp<int64_t>(x0, 0, xs.w - 1);
                    const int64_t x1c = std::clamp<int64_t>(x0 + 1, 0, xs.w - 1);
                    const double v00 = src[y0c * xs.w + x0c], v01 = src[y0c * xs.w + x1c];
                    const double v10 = src[y1c * xs.w + x0c], v11 = src[y1c * xs.w + x1c];
                    dst[oy * ow + ox] = static_cast<T>((1.0 - wy) * ((1.0 - wx) * v00 + wx * v01) +
                                                       wy * ((1.0 - wx) * v10 + wx * v11));
                }
            }
        }
    return out;
}

// Concatenate along the count axis; all inputs must agree on (C, H, W).
template <typename T>
Tensor<T> stack_frames(const std::vector<Tensor<T>>& frames) {
    require(!frames.empty(), "stack_frames: empty input");
    Shape s = frames[0].shape();
    int64_t total = 0;
    for (const auto& f : frames) {
        require(f.shape().c == s.c && f.shape().h == s.h && f.shape().w == s.w,
                "stack_frames: inconsistent frame shape " + f.shape().str() + " vs " + s.str());
        total += f.shape().n;
    }
    Tensor<T> out(Shape{total, s.c, s.h, s.w}, frames[0].range());
    int64_t off = 0;
    for (const auto& f : frames) {
        std::copy(f.data(), f.data() + f.size(), out.data() + off);
        off += f.size();
    }
    return out;
}

template <typename T>
Tensor<T> slice_frame(const Tensor<T>& x, int64_t n) {
    const Shape xs = x.shape();
    require(n >= 0 && n < xs.n, "slice_frame: index " + std::to_string(n) + " out of range of " + xs.str());
    Tensor<T> out(Shape{1, xs.c, xs.h, xs.w}, x.range());
    const int64_t sz = xs.c * xs.h * xs.w;
    std::copy(x.data() + n * sz, x.data() + (n + 1) * sz, out.data());
    return out;
}

}  // namespace uve

#endif  // UVE_CORE_OPS_HPP_
