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

#ifndef VTAD_OPTIMIZER_H_
#define VTAD_OPTIMIZER_H_

#include <cstdint>
#include <vector>

#include "vtad/tensor.h"

namespace vtad {

// Adaptive-moment optimizer with decoupled weight decay: the decay term
// shrinks parameters directly (θ ← θ − lr·wd·θ) instead of entering the
// gradient, so a zero-gradient step changes parameters by exactly the
// shrinkage factor.  Bias-corrected first/second moments with the canonical
// constants.
class AdamW {
 public:
  AdamW(std::vector<ParamRef> params, double beta1 = 0.9,
        double beta2 = 0.999, double eps = 1e-8, double weight_decay = 0.01);

  // One update at the given learning rate.  `grads` must parallel the
  // parameter list handed to the constructor (same order and shapes).
  void Step(const std::vector<ParamRef>& grads, double lr);

  uint64_t StepCount() const { return step_count_; }
  const std::vector<Tensor>& FirstMoments() const { return m_; }
  const std::vector<Tensor>& SecondMoments() const { return v_; }

  // Checkpoint restore: moments must match parameter shapes.
  void RestoreState(std::vector<Tensor> m, std::vector<Tensor> v,
                    uint64_t step_count);

 private:
  std::vector<ParamRef> params_;
  double beta1_, beta2_, eps_, weight_decay_;
  std::vector<Tensor> m_, v_;
  uint64_t step_count_ = 0;
};

// Cosine annealing:
//   lr(step) = eta_min + (lr0 - eta_min) · (1 + cos(π · step/total)) / 2.
// The three analytic points (start, midpoint, end) are returned exactly.
// step > total_steps or total_steps == 0 → InputError.
double CosineLr(uint64_t step, uint64_t total_steps, double lr0,
                double eta_min);

}  // namespace vtad

#endif  // VTAD_OPTIMIZER_H_
