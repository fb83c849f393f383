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

#ifndef UVE_TESTS_TEST_UTIL_HPP_
#define UVE_TESTS_TEST_UTIL_HPP_

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <functional>

#include "uve/core/ops.hpp"
#include "uve/core/rng.hpp"

namespace uve_test {

template <typename T>
uve::Tensor<T> random_tensor(uve::Shape s, uve::Rng& rng, double lo = -1.0, double hi = 1.0) {
    uve::Tensor<T> t(s);
    for (int64_t i = 0; i < t.size(); ++i) t[i] = static_cast<T>(rng.uniform(lo, hi));
    return t;
}

// test-only linear functional: loss = sum_i x[i] * w[i]
template <typename T>
uve::Var<T> dot_loss(uve::Tape<T>* tape, const uve::Var<T>& x, const uve::Tensor<T>& w) {
    double acc = 0.0;
    for (int64_t i = 0; i < x.value().size(); ++i)
        acc += static_cast<double>(x.value()[i]) * static_cast<double>(w[i]);
    uve::Var<T> out(uve::Tensor<T>::full(uve::Shape{1, 1, 1, 1}, static_cast<T>(acc)));
    if (tape && x.requires_grad()) {
        out.set_requires_grad(true);
        uve::Var<T> xc = x, oc = out;
        uve::Tensor<T> wc = w;
        tape->record([xc, oc, wc]() mutable {
            if (!oc.has_grad()) return;
            const T g = oc.grad()[0];
            T* dx = xc.grad().data();
            for (int64_t i = 0; i < wc.size(); ++i) dx[i] += g * wc[i];
        });
    }
    return out;
}

// Central-difference derivative of f() with respect to data[idx].
inline double central_diff(const std::function<double()>& f, double* slot, double h = 1e-6) {
    const double orig = *slot;
    *slot = orig + h;
    const double fp = f();
    *slot = orig - h;
    const double fm = f();
    *slot = orig;
    return (fp - fm) / (2.0 * h);
}

inline double rel_err(double a, double b) {
    const double denom = std::max(std::abs(a), std::abs(b));
    if (denom < 1e-10) return 0.0;
    return std::abs(a - b) / denom;
}

// Checks analytic gradients of `loss_fn` (which must rebuild the graph from
// the current tensor values each call) against central differences at up to
// `samples` evenly spread elements of `param`.
template <typename T>
void check_gradient(const std::function<uve::Var<T>(uve::Tape<T>*)>& loss_fn, uve::Var<T>& param,
                    int64_t samples, double tol, double h = 1e-6) {
    param.zero_grad();  // discard accumulation from earlier checks on shared graphs
    uve::Tape<T> tape;
    uve::Var<T> loss = loss_fn(&tape);
    tape.backward(loss);
    uve::Tensor<T> analytic = param.grad();
    param.zero_grad();
    tape.clear();

    const int64_t n = param.value().size();
    const int64_t step = std::max<int64_t>(1, n / samples);
    auto eval = [&]() -> double {
        uve::Var<T> l = loss_fn(nullptr);
        return static_cast<double>(l.value()[0]);
    };
    for (int64_t i = 0; i < n; i += step) {
        double* slot = nullptr;
        double orig = static_cast<double>(param.value()[i]);
        double fd;
        if constexpr (std::is_same_v<T, double>) {
            fd = central_diff(eval, &param.value()[i], h);
        } else {
            param.value()[i] = static_cast<T>(orig + h);
            const double fp = eval();
            param.value()[i] = static_cast<T>(orig - h);
            const double fm = eval();
            param.value()[i] = static_cast<T>(orig);
            fd = (fp - fm) / (2.0 * h);
        }
        (void)slot;
        const double err = rel_err(static_cast<double>(analytic[i]), fd);
        if (err > tol) {
            INFO("index " << i << " analytic " << analytic[i] << " fd " << fd << " rel " << err);
            REQUIRE(err <= tol);
        }
    }
}

}  // namespace uve_test

#endif  // UVE_TESTS_TEST_UTIL_HPP_
