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

#include "vtad/loss.h"

#include <algorithm>
#include <cmath>

#include "vtad/common.h"

namespace vtad {
namespace {

double ClampProb(double p) {
  return std::min(1.0 - kBceClamp, std::max(kBceClamp, p));
}

size_t MaskCount(const std::vector<uint8_t>& mask) {
  size_t count = 0;
  for (uint8_t m : mask) count += m ? 1 : 0;
  return count;
}

}  // namespace

double MaskedBceSample(const std::vector<double>& probs,
                       const std::vector<uint8_t>& labels,
                       const std::vector<uint8_t>& mask) {
  if (probs.size() != labels.size() || probs.size() != mask.size()) {
    throw ContractError("loss inputs must have equal lengths");
  }
  size_t count = MaskCount(mask);
  if (count == 0) {
    throw InputError("sample with empty attribute mask reached the loss");
  }
  double total = 0.0;
  for (size_t i = 0; i < probs.size(); ++i) {
    if (!mask[i]) continue;
    double p = ClampProb(probs[i]);
    total += labels[i] ? -std::log(p) : -std::log(1.0 - p);
  }
  return total / static_cast<double>(count);
}

double MaskedBceBatch(const Tensor& probs,
                      const std::vector<std::vector<uint8_t>>& labels,
                      const std::vector<std::vector<uint8_t>>& mask) {
  if (probs.Rank() != 2 || probs.Rows() != labels.size() ||
      labels.size() != mask.size() || labels.empty()) {
    throw ContractError("batch loss inputs must align and be non-empty");
  }
  size_t n = probs.Cols();
  double total = 0.0;
  for (size_t i = 0; i < labels.size(); ++i) {
    std::vector<double> row(probs.v.begin() + i * n,
                            probs.v.begin() + (i + 1) * n);
    total += MaskedBceSample(row, labels[i], mask[i]);
  }
  return total / static_cast<double>(labels.size());
}

Tensor MaskedBceGradWrtLogits(const Tensor& probs,
                              const std::vector<std::vector<uint8_t>>& labels,
                              const std::vector<std::vector<uint8_t>>& mask) {
  if (probs.Rank() != 2 || probs.Rows() != labels.size() ||
      labels.size() != mask.size() || labels.empty()) {
    throw ContractError("batch loss inputs must align and be non-empty");
  }
  size_t n = probs.Cols();
  size_t batch = labels.size();
  Tensor grad = Tensor::Zeros(probs.shape);
  for (size_t i = 0; i < batch; ++i) {
    if (labels[i].size() != n || mask[i].size() != n) {
      throw ContractError("label/mask rows must match the attribute count");
    }
    size_t count = MaskCount(mask[i]);
    if (count == 0) {
      throw InputError("sample with empty attribute mask reached the loss");
    }
    double denom = static_cast<double>(count) * static_cast<double>(batch);
    for (size_t j = 0; j < n; ++j) {
      if (!mask[i][j]) continue;
      double y = labels[i][j] ? 1.0 : 0.0;
      grad.v[i * n + j] = (probs.v[i * n + j] - y) / denom;
    }
  }
  return grad;
}

}  // namespace vtad
