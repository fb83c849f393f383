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

#ifndef UVE_UVE_HPP_
#define UVE_UVE_HPP_

#include "uve/annotate/mos.hpp"
#include "uve/core/autograd.hpp"
#include "uve/core/ops.hpp"
#include "uve/core/rng.hpp"
#include "uve/core/tensor.hpp"
#include "uve/data/dataset.hpp"
#include "uve/data/degradation.hpp"
#include "uve/data/image_io.hpp"
#include "uve/data/synthetic.hpp"
#include "uve/eval/benchmark.hpp"
#include "uve/eval/metrics.hpp"
#include "uve/infer/engine.hpp"
#include "uve/model/checkpoint.hpp"
#include "uve/model/config.hpp"
#include "uve/model/guidance.hpp"
#include "uve/model/layers.hpp"
#include "uve/model/network.hpp"
#include "uve/train/config.hpp"
#include "uve/train/loss.hpp"
#include "uve/train/optimizer.hpp"
#include "uve/train/trainer.hpp"

#endif  // UVE_UVE_HPP_
