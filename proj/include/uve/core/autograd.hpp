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

#ifndef UVE_CORE_AUTOGRAD_HPP_
#define UVE_CORE_AUTOGRAD_HPP_

#include <functional>
#include <initializer_list>
#include <memory>
#include <utility>
#include <vector>

#include "uve/core/tensor.hpp"

namespace uve {

// Reverse-mode autodiff over a linear tape. Ops append their backward
// closures in execution order; replaying the tape in reverse is a valid
// topological order of the graph.

template <typename T>
struct GradNode {
    Tensor<T> value;
    Tensor<T> grad;  // allocated on first accumulation
    bool requires_grad = false;

    bool has_grad() const { return !grad.empty(); }
    Tensor<T>& ensure_grad() {
        if (grad.empty()) grad = Tensor<T>::zeros(value.shape());
        return grad;
    }
};

template <typename T>
class Var {
public:
    Var() = default;
    explicit Var(Tensor<T> v, bool requires_grad = false)
        : node_(std::make_shared<GradNode<T>>()) {
        node_->value = std::move(v);
        node_->requires_grad = requires_grad;
    }

    bool defined() const { return node_ != nullptr; }
    const Tensor<T>& value() const { return node_->value; }
    Tensor<T>& value() { return node_->value; }
    Tensor<T>& grad() { return node_->ensure_grad(); }
    bool has_grad() const { return node_ && node_->has_grad(); }
    bool requires_grad() const { return node_ && node_->requires_grad; }
    void set_requires_grad(bool b) { node_->requires_grad = b; }
    void zero_grad() {
        if (node_ && node_->has_grad()) node_->grad.zero();
    }
    const Shape& shape() const { return node_->value.shape(); }
    std::shared_ptr<GradNode<T>> node() const { return node_; }

private:
    std::shared_ptr<GradNode<T>> node_;
};

template <typename T>
class Tape {
public:
    void record(std::function<void()> fn) { steps_.push_back(std::move(fn)); }

    // Seeds d(loss)/d(loss) = 1 and replays the tape in reverse.
    void backward(Var<T>& loss) {
        require(loss.value().size() == 1, "backward: loss must be a scalar tensor");
        loss.grad().fill(T(1));
        for (auto it = steps_.rbegin(); it != steps_.rend(); ++it) (*it)();
    }

    void clear() { steps_.clear(); }
    std::size_t size() const { return steps_.size(); }

private:
    std::vector<std::function<void()>> steps_;
};

// True when an op invoked with this tape/context should record a backward step.
template <typename T>
inline bool tracing(const Tape<T>* tape, std::initializer_list<const Var<T>*> inputs) {
    if (!tape) return false;
    for (const Var<T>* v : inputs)
        if (v && v->defined() && v->requires_grad()) return true;
    return false;
}

}  // namespace uve

#endif  // UVE_CORE_AUTOGRAD_HPP_
