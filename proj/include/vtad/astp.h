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

#ifndef VTAD_ASTP_H_
#define VTAD_ASTP_H_

#include <cstdint>
#include <string>
#include <vector>

#include "vtad/layer_stack.h"
#include "vtad/tensor.h"

namespace vtad {

class Rng;

// Multi-head attentive statistics pooling over the layer axis: each head
// owns a contiguous slice of channels, scores every layer with a small
// tanh scorer, softmax-normalizes the scores into attention weights, and
// emits the attention-weighted mean and standard deviation of its slice.
// Output = all head means (D dims) followed by all head stds (D dims).
struct AstpConfig {
  uint32_t dim = 1024;   // channels per layer
  uint32_t heads = 8;    // must divide dim
  uint32_t attn_dim = 0; // scorer hidden width; 0 → dim/heads
  double eps = 1e-8;     // variance floor inside the sqrt
  double dropout = 0.1;  // rate at the two dropout sites

  uint32_t SliceDim() const;  // dim / heads; ConfigError if indivisible
  uint32_t AttnDim() const { return attn_dim != 0 ? attn_dim : SliceDim(); }
  void Validate() const;
};

struct AstpParams {
  AstpConfig config;
  // Per head: w (A x S), b (A), v (A), k (1); S = dim/heads.
  std::vector<Tensor> w, b, v, k;

  // Deterministic init: per head, w then v filled with scaled-uniform draws
  // (bounds 1/sqrt(S) and 1/sqrt(A)); b and k zero.
  static AstpParams Init(const AstpConfig& config, uint64_t seed);
  static AstpParams Zeros(const AstpConfig& config);

  // Stable parameter listing (head-major, then w/b/v/k) used by the
  // optimizer and the checkpoint format.
  std::vector<ParamRef> Params(const std::string& prefix);
};

// Everything the backward pass needs from one forward call.
struct AstpCache {
  bool train = false;
  Tensor x;                                  // (L, dim) input copy
  std::vector<std::vector<double>> tanh_out; // per head: L*A
  std::vector<std::vector<uint8_t>> hidden_keep;  // per head: L*A (train)
  std::vector<std::vector<double>> hidden;   // per head: L*A post-dropout
  std::vector<std::vector<double>> alpha;    // per head: L
  std::vector<std::vector<double>> mu;       // per head: S
  std::vector<std::vector<double>> raw_sq;   // per head: S  (Σ α x²)
  std::vector<std::vector<double>> var;      // per head: S  (pre-floor)
  std::vector<std::vector<double>> sigma;    // per head: S
  std::vector<uint8_t> out_keep;             // 2*dim (train)
  std::vector<double> pooled;                // 2*dim pre-output-dropout
};

// Forward pass.  `x` has shape (L, dim) with L >= 1.  In train mode,
// inverted dropout runs at two sites — after the tanh scorer hidden and on
// the pooled embedding — with keep decisions drawn from `dropout_rng` in a
// fixed order (per head, per layer, per hidden unit; then per output
// coordinate); no draws happen in eval mode or at rate 0.  `cache` may be
// null when no backward pass will follow.
std::vector<double> AstpForward(const AstpParams& params, const Tensor& x,
                                bool train, Rng* dropout_rng,
                                AstpCache* cache);

// Accumulates parameter gradients into `grads` (same shapes as `params`)
// and, when `grad_x` is non-null, writes the input gradient (shape of x).
void AstpBackward(const AstpParams& params, const AstpCache& cache,
                  const std::vector<double>& grad_out, AstpParams* grads,
                  Tensor* grad_x);

// Converts a layer stack to a (num_layers, dim) tensor of doubles.
Tensor StackToTensor(const LayerStack& stack);

}  // namespace vtad

#endif  // VTAD_ASTP_H_
