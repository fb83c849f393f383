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

#ifndef UVE_TRAIN_LOSS_HPP_
#define UVE_TRAIN_LOSS_HPP_

#include "uve/core/ops.hpp"

namespace uve {

struct LossBreakdown {
    double main_loss = 0.0;  // mean over frames of the per-frame pixel loss
    double aux_loss = 0.0;   // auxiliary-branch pixel loss (0 when disabled)
    double total = 0.0;      // main_loss + aux_loss
};

template <typename T>
struct LossResult {
    LossBreakdown breakdown;
    Var<T> total_var;  // scalar node for backward
};

// charbonnier(pred, target, eps) lives in core/ops.hpp; this combines the
// two branch terms. The per-frame mean equals the whole-tensor mean because
// every frame in a batch has the same element count.
template <typename T>
LossResult<T> total_loss(Tape<T>* tape, const Var<T>& enhanced, const Var<T>& gt,
                         const Var<T>& aux_pred, const Var<T>& aux_gt, T eps) {
    require(enhanced.shape().n == gt.shape().n,
            "total_loss: window length mismatch, enhanced " + enhanced.shape().str() + " vs gt " +
                gt.shape().str());
    LossResult<T> out;
    Var<T> main = charbonnier_loss(tape, enhanced, gt, eps);
    out.breakdown.main_loss = static_cast<double>(main.value()[0]);
    if (aux_pred.defined()) {
        require(aux_gt.defined(), "total_loss: auxiliary prediction present but target missing");
        Var<T> aux = charbonnier_loss(tape, aux_pred, aux_gt, eps);
        out.breakdown.aux_loss = static_cast<double>(aux.value()[0]);
        out.total_var = add(tape, main, aux);
    } else {
        out.total_var = main;
    }
    out.breakdown.total = static_cast<double>(out.total_var.value()[0]);
    return out;
}

}  // namespace uve

#endif  // UVE_TRAIN_LOSS_HPP_
