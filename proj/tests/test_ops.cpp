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

#include "test_util.hpp"

using namespace uve;
using uve_test::check_gradient;
using uve_test::dot_loss;
using uve_test::random_tensor;

namespace {

// reference convolution, stride 1, zero padding
template <typename T>
Tensor<T> conv2d_brute(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b, int64_t pad) {
    const Shape xs = x.shape(), ws = w.shape();
    const int64_t k = ws.h, oh = xs.h + 2 * pad - k + 1, ow = xs.w + 2 * pad - k + 1;
    Tensor<T> out(Shape{xs.n, ws.n, oh, ow});
    for (int64_t n = 0; n < xs.n; ++n)
        for (int64_t co = 0; co < ws.n; ++co)
            for (int64_t oy = 0; oy < oh; ++oy)
                for (int64_t ox = 0; ox < ow; ++ox) {
                    double acc = b.empty() ? 0.0 : static_cast<double>(b.at(0, co, 0, 0));
                    for (int64_t ci = 0; ci < xs.c; ++ci)
                        for (int64_t dy = 0; dy < k; ++dy)
                            for (int64_t dx = 0; dx < k; ++dx) {
                                const int64_t iy = oy + dy - pad, ix = ox + dx - pad;
                                if (iy < 0 || iy >= xs.h || ix < 0 || ix >= xs.w) continue;
                                acc += static_cast<double>(x.at(n, ci, iy, ix)) *
                                       static_cast<double>(w.at(co, ci, dy, dx));
                            }
                    out.at(n, co, oy, ox) = static_cast<T>(acc);
                }
    return out;
}

template <typename T>
Tensor<T> pool_brute(const Tensor<T>& x, int64_t oh, int64_t ow) {
    const Shape xs = x.shape();
    Tensor<T> out(Shape{xs.n, xs.c, oh, ow});
    for (int64_t n = 0; n < xs.n; ++n)
        for (int64_t c = 0; c < xs.c; ++c)
            for (int64_t oy = 0; oy < oh; ++oy)
                for (int64_t ox = 0; ox < ow; ++ox) {
                    const int64_t ys = (oy * xs.h) / oh, ye = ((oy + 1) * xs.h + oh - 1) / oh;
                    const int64_t xs_ = (ox * xs.w) / ow, xe = ((ox + 1) * xs.w + ow - 1) / ow;
                    double acc = 0.0;
                    for (int64_t y = ys; y < ye; ++y)
                        for (int64_t xx = xs_; xx < xe; ++xx) acc += x.at(n, c, y, xx);
                    out.at(n, c, oy, ox) = static_cast<T>(acc / static_cast<double>((ye - ys) * (xe - xs_)));
                }
    return out;
}

}  // namespace

TEST_CASE("conv2d matches brute-force reference") {
    Rng rng(11);
    for (auto [cin, cout, h, w, k, pad] : {std::tuple<int64_t, int64_t, int64_t, int64_t, int64_t, int64_t>{3, 8, 9, 7, 3, 1},
                                           {5, 2, 6, 6, 3, 0},
                                           {1, 4, 5, 8, 1, 0},
                                           {4, 4, 4, 4, 3, 1}}) {
        Var<double> x(random_tensor<double>(Shape{2, cin, h, w}, rng));
        Var<double> wt(random_tensor<double>(Shape{cout, cin, k, k}, rng));
        Var<double> b(random_tensor<double>(Shape{1, cout, 1, 1}, rng));
        Var<double> out = conv2d<double>(nullptr, x, wt, b, pad);
        Tensor<double> ref = conv2d_brute(x.value(), wt.value(), b.value(), pad);
        REQUIRE(out.shape() == ref.shape());
        for (int64_t i = 0; i < ref.size(); ++i)
            REQUIRE_THAT(out.value()[i], Catch::Matchers::WithinAbs(ref[i], 1e-12));
    }
}

TEST_CASE("conv2d rejects shape violations") {
    Rng rng(3);
    Var<double> x(random_tensor<double>(Shape{1, 3, 8, 8}, rng));
    Var<double> w(random_tensor<double>(Shape{4, 2, 3, 3}, rng));
    REQUIRE_THROWS_AS(conv2d<double>(nullptr, x, w, Var<double>(), 1), ShapeError);
}

TEST_CASE("conv2d gradients match central differences") {
    Rng rng(17);
    Var<double> x(random_tensor<double>(Shape{2, 3, 6, 5}, rng), true);
    Var<double> w(random_tensor<double>(Shape{4, 3, 3, 3}, rng), true);
    Var<double> b(random_tensor<double>(Shape{1, 4, 1, 1}, rng), true);
    Tensor<double> lw = random_tensor<double>(Shape{2, 4, 6, 5}, rng);
    auto loss = [&](Tape<double>* tape) {
        return dot_loss(tape, conv2d(tape, x, w, b, 1), lw);
    };
    check_gradient<double>(loss, x, 24, 1e-6);
    check_gradient<double>(loss, w, 24, 1e-6);
    check_gradient<double>(loss, b, 4, 1e-6);
}

TEST_CASE("relu, add, bias_add gradients") {
    Rng rng(23);
    Var<double> x(random_tensor<double>(Shape{2, 3, 4, 4}, rng), true);
    Var<double> y(random_tensor<double>(Shape{2, 3, 4, 4}, rng), true);
    Var<double> b(random_tensor<double>(Shape{1, 3, 1, 1}, rng), true);
    Tensor<double> lw = random_tensor<double>(Shape{2, 3, 4, 4}, rng);
    auto loss = [&](Tape<double>* tape) {
        return dot_loss(tape, relu(tape, bias_add(tape, add(tape, x, y), b)), lw);
    };
    check_gradient<double>(loss, x, 16, 1e-5);
    check_gradient<double>(loss, y, 16, 1e-5);
    check_gradient<double>(loss, b, 3, 1e-5);
}

TEST_CASE("pixel_unshuffle shape examples") {
    Rng rng(5);
    Var<float> a(random_tensor<float>(Shape{1, 16, 64, 64}, rng));
    REQUIRE(pixel_unshuffle<float>(nullptr, a, 4).shape() == Shape{1, 256, 16, 16});

    Var<float> b(random_tensor<float>(Shape{1, 3, 8, 8}, rng));
    Var<float> same = pixel_unshuffle<float>(nullptr, b, 1);
    REQUIRE(same.shape() == Shape{1, 3, 8, 8});
    for (int64_t i = 0; i < same.value().size(); ++i) REQUIRE(same.value()[i] == b.value()[i]);

    Var<float> bad(random_tensor<float>(Shape{1, 3, 30, 32}, rng));
    REQUIRE_THROWS_WITH(pixel_unshuffle<float>(nullptr, bad, 4),
                        Catch::Matchers::ContainsSubstring("height"));
}

TEST_CASE("pixel_shuffle shape examples") {
    Rng rng(6);
    Var<float> a(random_tensor<float>(Shape{1, 256, 16, 16}, rng));
    REQUIRE(pixel_shuffle<float>(nullptr, a, 2).shape() == Shape{1, 64, 32, 32});
    REQUIRE(pixel_shuffle<float>(nullptr, a, 4).shape() == Shape{1, 16, 64, 64});

    Var<float> c(Tensor<float>::full(Shape{1, 4, 2, 2}, 0.37f));
    Var<float> up = pixel_shuffle<float>(nullptr, c, 2);
    REQUIRE(up.shape() == Shape{1, 1, 4, 4});
    for (int64_t i = 0; i < up.value().size(); ++i) REQUIRE(up.value()[i] == 0.37f);

    Var<float> bad(random_tensor<float>(Shape{1, 15, 4, 4}, rng));
    REQUIRE_THROWS_WITH(pixel_shuffle<float>(nullptr, bad, 2),
                        Catch::Matchers::ContainsSubstring("channel"));
}

TEST_CASE("pixel shuffle/unshuffle are exact mutual inverses and preserve sums") {
    Rng rng(7);
    for (int iter = 0; iter < 200; ++iter) {
        const int64_t r = (iter % 2 == 0) ? 2 : 4;
        const int64_t n = 1 + rng.uniform_int(2);
        const int64_t c = 1 + rng.uniform_int(4);
        const int64_t h = r * (1 + rng.uniform_int(6));
        const int64_t w = r * (1 + rng.uniform_int(6));
        Var<float> x(random_tensor<float>(Shape{n, c, h, w}, rng));

        Var<float> down = pixel_unshuffle<float>(nullptr, x, r);
        Var<float> back = pixel_shuffle<float>(nullptr, down, r);
        REQUIRE(back.shape() == x.shape());
        for (int64_t i = 0; i < x.value().size(); ++i)
            REQUIRE(back.value()[i] == x.value()[i]);  // bit-exact

        double sx = 0, sd = 0;
        for (int64_t i = 0; i < x.value().size(); ++i) sx += x.value()[i];
        for (int64_t i = 0; i < down.value().size(); ++i) sd += down.value()[i];
        REQUIRE_THAT(sd, Catch::Matchers::WithinRel(sx, 1e-12));

        // and the other composition order
        Var<float> up = pixel_shuffle<float>(nullptr, pixel_unshuffle<float>(nullptr, x, r), r);
        for (int64_t i = 0; i < x.value().size(); ++i) REQUIRE(up.value()[i] == x.value()[i]);
    }
}

TEST_CASE("pixel rearrangement gradients") {
    Rng rng(29);
    Var<double> x(random_tensor<double>(Shape{1, 8, 4, 4}, rng), true);
    Tensor<double> lw = random_tensor<double>(Shape{1, 2, 8, 8}, rng);
    auto loss = [&](Tape<double>* tape) {
        return dot_loss(tape, pixel_shuffle(tape, x, 2), lw);
    };
    check_gradient<double>(loss, x, 32, 1e-7);

    Tensor<double> lw2 = random_tensor<double>(Shape{1, 32, 2, 2}, rng);
    auto loss2 = [&](Tape<double>* tape) {
        return dot_loss(tape, pixel_unshuffle(tape, x, 2), lw2);
    };
    check_gradient<double>(loss2, x, 32, 1e-7);
}

TEST_CASE("adaptive_avg_pool matches reference, including inputs smaller than the grid") {
    Rng rng(31);
    for (auto [h, w] : {std::pair<int64_t, int64_t>{8, 6}, {3, 3}, {2, 2}, {1, 5}, {7, 2}}) {
        Var<double> x(random_tensor<double>(Shape{2, 3, h, w}, rng));
        Var<double> out = adaptive_avg_pool<double>(nullptr, x, 3, 3);
        Tensor<double> ref = pool_brute(x.value(), 3, 3);
        REQUIRE(out.shape() == Shape{2, 3, 3, 3});
        for (int64_t i = 0; i < ref.size(); ++i)
            REQUIRE_THAT(out.value()[i], Catch::Matchers::WithinAbs(ref[i], 1e-12));
    }
}

TEST_CASE("adaptive_avg_pool gradients (overlapping windows included)") {
    Rng rng(37);
    Var<double> x(random_tensor<double>(Shape{1, 2, 2, 2}, rng), true);
    Tensor<double> lw = random_tensor<double>(Shape{1, 2, 3, 3}, rng);
    auto loss = [&](Tape<double>* tape) {
        return dot_loss(tape, adaptive_avg_pool(tape, x, 3, 3), lw);
    };
    check_gradient<double>(loss, x, 8, 1e-7);

    Var<double> y(random_tensor<double>(Shape{1, 2, 9, 7}, rng), true);
    auto loss2 = [&](Tape<double>* tape) {
        return dot_loss(tape, adaptive_avg_pool(tape, y, 3, 3), lw);
    };
    check_gradient<double>(loss2, y, 24, 1e-7);
}

TEST_CASE("dynamic depthwise: delta kernel is the identity") {
    Rng rng(41);
    Var<float> feat(random_tensor<float>(Shape{3, 8, 6, 6}, rng));
    Tensor<float> k = Tensor<float>::zeros(Shape{1, 8, 3, 3});
    for (int64_t c = 0; c < 8; ++c) k.at(0, c, 1, 1) = 1.0f;
    Var<float> out = dyn_depthwise3x3<float>(nullptr, feat, Var<float>(k));
    REQUIRE(out.shape() == feat.shape());
    for (int64_t i = 0; i < out.value().size(); ++i) REQUIRE(out.value()[i] == feat.value()[i]);
}

TEST_CASE("dynamic depthwise: 1/9 box kernel on a constant channel") {
    // interior pixels keep the value; border pixels scale by the fraction of
    // in-bounds taps (zero padding)
    const float c0 = 0.9f;
    Var<float> feat(Tensor<float>::full(Shape{1, 1, 5, 5}, c0));
    Var<float> k(Tensor<float>::full(Shape{1, 1, 3, 3}, 1.0f / 9.0f));
    Var<float> out = dyn_depthwise3x3<float>(nullptr, feat, k);
    for (int64_t y = 0; y < 5; ++y)
        for (int64_t x = 0; x < 5; ++x) {
            const int64_t ty = (y == 0 || y == 4) ? 2 : 3;
            const int64_t tx = (x == 0 || x == 4) ? 2 : 3;
            const float expect = c0 * static_cast<float>(ty * tx) / 9.0f;
            REQUIRE_THAT(out.value().at(0, 0, y, x), Catch::Matchers::WithinAbs(expect, 1e-6));
        }
}

TEST_CASE("dynamic depthwise: one kernel set broadcast over a window") {
    Rng rng(43);
    Var<float> feat(random_tensor<float>(Shape{3, 256, 16, 16}, rng));
    Var<float> k(random_tensor<float>(Shape{1, 256, 3, 3}, rng));
    Var<float> out = dyn_depthwise3x3<float>(nullptr, feat, k);
    REQUIRE(out.shape() == Shape{3, 256, 16, 16});
    // every frame in the window sees identical kernels: frame-wise outputs of
    // identical inputs agree
    Var<float> feat_same(stack_frames<float>({slice_frame(feat.value(), 0), slice_frame(feat.value(), 0),
                                              slice_frame(feat.value(), 0)}));
    Var<float> out_same = dyn_depthwise3x3<float>(nullptr, feat_same, k);
    for (int64_t i = 0; i < out_same.value().size() / 3; ++i) {
        REQUIRE(out_same.value()[i] == out_same.value()[i + out_same.value().size() / 3]);
    }
    REQUIRE_THROWS_AS(
        dyn_depthwise3x3<float>(nullptr, feat, Var<float>(random_tensor<float>(Shape{1, 128, 3, 3}, rng))),
        ConfigError);
}

TEST_CASE("dynamic depthwise gradients for features and kernels, with broadcast") {
    Rng rng(47);
    Var<double> feat(random_tensor<double>(Shape{4, 3, 5, 4}, rng), true);
    Var<double> k(random_tensor<double>(Shape{2, 3, 3, 3}, rng), true);  // 2 windows of 2 frames
    Tensor<double> lw = random_tensor<double>(Shape{4, 3, 5, 4}, rng);
    auto loss = [&](Tape<double>* tape) {
        return dot_loss(tape, dyn_depthwise3x3(tape, feat, k), lw);
    };
    check_gradient<double>(loss, feat, 30, 1e-6);
    check_gradient<double>(loss, k, 54, 1e-6);
}

TEST_CASE("charbonnier floor and closed forms") {
    const double eps = 1e-3;
    Var<double> a(Tensor<double>::full(Shape{1, 3, 4, 4}, 0.25));
    Var<double> b(Tensor<double>::full(Shape{1, 3, 4, 4}, 0.25));
    Var<double> l = charbonnier_loss<double>(nullptr, a, b, eps);
    // floor is eps; the mean introduces at most an ulp of summation rounding
    REQUIRE_THAT(l.value()[0], Catch::Matchers::WithinULP(eps, 2));

    const double d = 0.11;
    Var<double> c(Tensor<double>::full(Shape{1, 3, 4, 4}, 0.25 + d));
    Var<double> l2 = charbonnier_loss<double>(nullptr, c, b, eps);
    REQUIRE_THAT(l2.value()[0], Catch::Matchers::WithinRel(std::sqrt(d * d + eps * eps), 1e-12));

    Rng rng(53);
    Var<double> p(random_tensor<double>(Shape{1, 1, 2, 2}, rng));
    Var<double> q(random_tensor<double>(Shape{1, 1, 2, 2}, rng));
    double hand = 0.0;
    for (int64_t i = 0; i < 4; ++i) {
        const double diff = p.value()[i] - q.value()[i];
        hand += std::sqrt(diff * diff + eps * eps);
    }
    hand /= 4.0;
    Var<double> l3 = charbonnier_loss<double>(nullptr, p, q, eps);
    REQUIRE_THAT(l3.value()[0], Catch::Matchers::WithinRel(hand, 1e-12));

    REQUIRE_THROWS_AS(charbonnier_loss<double>(nullptr, p, a, eps), ShapeError);
    REQUIRE_THROWS_AS(charbonnier_loss<double>(nullptr, p, q, 0.0), ConfigError);
}

TEST_CASE("charbonnier gradients") {
    Rng rng(59);
    Var<double> p(random_tensor<double>(Shape{1, 2, 3, 3}, rng), true);
    Var<double> q(random_tensor<double>(Shape{1, 2, 3, 3}, rng));
    auto loss = [&](Tape<double>* tape) { return charbonnier_loss(tape, p, q, 1e-3); };
    check_gradient<double>(loss, p, 18, 1e-6);
}

TEST_CASE("bilinear_resize basics") {
    Var<float> c(Tensor<float>::full(Shape{1, 3, 8, 8}, 0.4f));
    Tensor<float> down = bilinear_resize(c.value(), 2, 2);
    REQUIRE(down.shape() == Shape{1, 3, 2, 2});
    for (int64_t i = 0; i < down.size(); ++i) REQUIRE_THAT(down[i], Catch::Matchers::WithinAbs(0.4f, 1e-6));

    Tensor<float> x(Shape{1, 1, 2, 2});
    x.at(0, 0, 0, 0) = 0.0f;
    x.at(0, 0, 0, 1) = 1.0f;
    x.at(0, 0, 1, 0) = 1.0f;
    x.at(0, 0, 1, 1) = 0.0f;
    Tensor<float> one = bilinear_resize(x, 1, 1);
    REQUIRE_THAT(one.at(0, 0, 0, 0), Catch::Matchers::WithinAbs(0.5f, 1e-6));

    Rng rng(61);
    Tensor<float> r = random_tensor<float>(Shape{1, 3, 6, 6}, rng);
    Tensor<float> same = bilinear_resize(r, 6, 6);
    for (int64_t i = 0; i < r.size(); ++i) REQUIRE_THAT(same[i], Catch::Matchers::WithinAbs(r[i], 1e-6));
}

TEST_CASE("stack and slice round trip") {
    Rng rng(67);
    std::vector<Tensor<float>> frames;
    for (int i = 0; i < 3; ++i) frames.push_back(random_tensor<float>(Shape{1, 3, 4, 4}, rng));
    Tensor<float> stacked = stack_frames(frames);
    REQUIRE(stacked.shape() == Shape{3, 3, 4, 4});
    for (int i = 0; i < 3; ++i) {
        Tensor<float> back = slice_frame(stacked, i);
        for (int64_t j = 0; j < back.size(); ++j) REQUIRE(back[j] == frames[static_cast<std::size_t>(i)][j]);
    }
}

TEST_CASE("clamp01 clips to the pixel range") {
    Tensor<float> x(Shape{1, 1, 1, 4});
    x[0] = -0.5f;
    x[1] = 0.25f;
    x[2] = 1.75f;
    x[3] = 1.0f;
    Tensor<float> y = clamp01(x);
    REQUIRE(y[0] == 0.0f);
    REQUIRE(y[1] == 0.25f);
    REQUIRE(y[2] == 1.0f);
    REQUIRE(y[3] == 1.0f);
    REQUIRE(y.range() == ValueRange::pixel);
}
