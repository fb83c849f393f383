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

#ifndef UVE_TRAIN_OPTIMIZER_HPP_
#define UVE_TRAIN_OPTIMIZER_HPP_

#include <cmath>
#include <string>
#include <vector>

#include "uve/model/layers.hpp"

namespace uve {

template <typename T>
class Adam {
public:
    explicit Adam(NamedParams<T> params, double beta1 = 0.9, double beta2 = 0.999,
                  double eps = 1e-8)
        : params_(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps) {
        states_.reserve(params_.size());
        for (auto& [name, var] : params_)
            states_.push_back(State{Tensor<T>::zeros(var->shape()), Tensor<T>::zeros(var->shape())});
    }

    void zero_grad() {
        for (auto& [name, var] : params_) var->zero_grad();
    }

    // Returns the global gradient norm (before clipping). max_norm <= 0
    // disables clipping.
    double clip_grad_norm(double max_norm) {
        double sq = 0.0;
        for (auto& [name, var] : params_) {
            if (!var->has_grad()) continue;
            const Tensor<T>& g = var->grad();
            for (int64_t i = 0; i < g.size(); ++i)
                sq += static_cast<double>(g[i]) * static_cast<double>(g[i]);
        }
        const double norm = std::sqrt(sq);
        if (max_norm > 0.0 && norm > max_norm) {
            const T scale = static_cast<T>(max_norm / norm);
            for (auto& [name, var] : params_) {
                if (!var->has_grad()) continue;
                Tensor<T>& g = var->grad();
                for (int64_t i = 0; i < g.size(); ++i) g[i] *= scale;
            }
        }
        return norm;
    }

    void step(double lr) {
        ++step_;
        const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(step_));
        const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(step_));
        for (std::size_t p = 0; p < params_.size(); ++p) {
            Var<T>* var = params_[p].second;
            if (!var->has_grad()) continue;
            Tensor<T>& g = var->grad();
            Tensor<T>& m = states_[p].m;
            Tensor<T>& v = states_[p].v;
            T* wp = var->value().data();
            for (int64_t i = 0; i < g.size(); ++i) {
                const double gi = static_cast<double>(g[i]);
                const double mi = beta1_ * static_cast<double>(m[i]) + (1.0 - beta1_) * gi;
                const double vi = beta2_ * static_cast<double>(v[i]) + (1.0 - beta2_) * gi * gi;
                m[i] = static_cast<T>(mi);
                v[i] = static_cast<T>(vi);
                const double update = lr * (mi / bc1) / (std::sqrt(vi / bc2) + eps_);
                wp[i] = static_cast<T>(static_cast<double>(wp[i]) - update);
            }
        }
    }

    int64_t iterations() const { return step_; }
    void set_iterations(int64_t s) { step_ = s; }

    const NamedParams<T>& params() const { return params_; }
    Tensor<T>& moment1(std::size_t i) { return states_[i].m; }
    Tensor<T>& moment2(std::size_t i) { return states_[i].v; }

private:
    struct State {
        Tensor<T> m, v;
    };
    NamedParams<T> params_;
    std::vector<State> states_;
    double beta1_, beta2_, eps_;
    int64_t step_ = 0;
};

}  // namespace uve

#endif  // UVE_TRAIN_OPTIMIZER_HPP_
