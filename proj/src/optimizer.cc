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

#include "vtad/optimizer.h"

#include <cmath>

#include "vtad/common.h"

namespace vtad {

AdamW::AdamW(std::vector<ParamRef> params, double beta1, double beta2,
             double eps, double weight_decay)
    : params_(std::move(params)),
      beta1_(beta1),
      beta2_(beta2),
      eps_(eps),
      weight_decay_(weight_decay) {
  if (beta1_ < 0.0 || beta1_ >= 1.0 || beta2_ < 0.0 || beta2_ >= 1.0) {
    throw ConfigError("optimizer betas must be in [0, 1)");
  }
  if (eps_ <= 0.0) throw ConfigError("optimizer epsilon must be > 0");
  if (weight_decay_ < 0.0) {
    throw ConfigError("weight decay must be non-negative");
  }
  for (const ParamRef& p : params_) {
    m_.push_back(Tensor::ZerosLike(*p.tensor));
    v_.push_back(Tensor::ZerosLike(*p.tensor));
  }
}

void AdamW::Step(const std::vector<ParamRef>& grads, double lr) {
  if (grads.size() != params_.size()) {
    throw ContractError("gradient list does not parallel the parameters");
  }
  ++step_count_;
  double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(step_count_));
  double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(step_count_));
  for (size_t i = 0; i < params_.size(); ++i) {
    Tensor& theta = *params_[i].tensor;
    const Tensor& g = *grads[i].tensor;
    if (g.v.size() != theta.v.size()) {
      throw ContractError("gradient shape mismatch for " + params_[i].name);
    }
    Tensor& m = m_[i];
    Tensor& v = v_[i];
    for (size_t j = 0; j < theta.v.size(); ++j) {
      m.v[j] = beta1_ * m.v[j] + (1.0 - beta1_) * g.v[j];
      v.v[j] = beta2_ * v.v[j] + (1.0 - beta2_) * g.v[j] * g.v[j];
      double m_hat = m.v[j] / bc1;
      double v_hat = v.v[j] / bc2;
      theta.v[j] -= lr * (m_hat / (std::sqrt(v_hat) + eps_) +
                          weight_decay_ * theta.v[j]);
    }
  }
}

void AdamW::RestoreState(std::vector<Tensor> m, std::vector<Tensor> v,
                         uint64_t step_count) {
  if (m.size() != params_.size() || v.size() != params_.size()) {
    throw ContractError("optimizer state does not parallel the parameters");
  }
  for (size_t i = 0; i < params_.size(); ++i) {
    if (m[i].v.size() != params_[i].tensor->v.size() ||
        v[i].v.size() != params_[i].tensor->v.size()) {
      throw ContractError("optimizer state shape mismatch for " +
                          params_[i].name);
    }
  }
  m_ = std::move(m);
  v_ = std::move(v);
  step_count_ = step_count;
}

double CosineLr(uint64_t step, uint64_t total_steps, double lr0,
                double eta_min) {
  if (total_steps == 0) {
    throw InputError("cosine schedule needs total_steps >= 1");
  }
  if (step > total_steps) {
    throw InputError("schedule step " + std::to_string(step) +
                     " beyond total " + std::to_string(total_steps));
  }
  if (step == 0) return lr0;
  if (step == total_steps) return eta_min;
  if (2 * step == total_steps) return 0.5 * (lr0 + eta_min);
  double frac = static_cast<double>(step) / static_cast<double>(total_steps);
  return eta_min + (lr0 - eta_min) * 0.5 * (1.0 + std::cos(M_PI * frac));
}

}  // namespace vtad
