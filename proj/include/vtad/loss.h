// Copyright (c) 2025 The vtad Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef VTAD_LOSS_H_
#define VTAD_LOSS_H_

#include <cstdint>
#include <vector>

#include "vtad/tensor.h"

namespace vtad {

// Probabilities are clamped into [kBceClamp, 1 - kBceClamp] before taking
// logs so a saturated prediction yields a large finite loss.
inline constexpr double kBceClamp = 1e-7;

// Mean binary cross-entropy over the masked attributes of one sample.
// Σ mask == 0 → InputError (such samples must never reach the loss).
double MaskedBceSample(const std::vector<double>& probs,
                       const std::vector<uint8_t>& labels,
                       const std::vector<uint8_t>& mask);

// Batch loss: per-sample masked mean, then mean over samples, so samples
// with many annotated attributes do not dominate.  probs is
// (batch, num_attributes); labels/mask hold one row per sample.
double MaskedBceBatch(const Tensor& probs,
                      const std::vector<std::vector<uint8_t>>& labels,
                      const std::vector<std::vector<uint8_t>>& mask);

// Gradient of MaskedBceBatch w.r.t. the pre-sigmoid logits, with the
// sigmoid folded in analytically: (p - y) · mask / (per-sample mask count ·
// batch).  Folding keeps the gradient exact and alive even where the loss
// value was clamped.
Tensor MaskedBceGradWrtLogits(const Tensor& probs,
                              const std::vector<std::vector<uint8_t>>& labels,
                              const std::vector<std::vector<uint8_t>>& mask);

}  // namespace vtad

#endif  // VTAD_LOSS_H_
