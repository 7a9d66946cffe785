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

#ifndef VTAD_DIFFNET_H_
#define VTAD_DIFFNET_H_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "vtad/tensor.h"

namespace vtad {

class Rng;

// Comparison head: maps a concatenated pair embedding to one probability per
// attribute.  Two variants share the scaffolding:
//   ffn:       blocks of [FC -> BatchNorm -> ReLU -> Dropout] at the hidden
//              widths, then a final FC + sigmoid.
//   se-resffn: squeeze-and-excitation residual blocks at the hidden widths,
//              then BatchNorm, FC -> ReLU -> FC (head widths), final FC +
//              sigmoid, and no dropout anywhere.
struct DiffNetConfig {
  std::string variant = "ffn";  // ffn | se-resffn
  uint32_t input_dim = 4096;
  uint32_t output_dim = 34;
  std::vector<uint32_t> hidden;       // ffn widths or residual block widths
  std::vector<uint32_t> head_hidden;  // se-resffn only; exactly two widths
  double dropout = 0.3;               // ffn only
  uint32_t se_reduction = 16;         // gate bottleneck ratio
  double bn_eps = 1e-8;
  double bn_momentum = 0.1;

  static DiffNetConfig Ffn(uint32_t input_dim = 4096,
                           uint32_t output_dim = 34);
  static DiffNetConfig SeResFfn(uint32_t input_dim = 4096,
                                uint32_t output_dim = 34);
  void Validate() const;
  bool IsSe() const { return variant == "se-resffn"; }
};

struct LinearParams {
  Tensor w;  // (out, in)
  Tensor b;  // (out)
};

struct BnParams {
  Tensor gamma, beta;              // trainable
  Tensor running_mean, running_var;  // buffers, consumed in eval mode
};

struct SeParams {
  LinearParams fc1;  // d -> d/r
  LinearParams fc2;  // d/r -> d
};

struct SeResBlockParams {
  LinearParams fc1;  // d_in -> d_out
  BnParams bn1;
  LinearParams fc2;  // d_out -> d_out
  BnParams bn2;
  SeParams se;
  bool has_projection = false;  // engaged when d_in != d_out
  LinearParams proj;
  BnParams proj_bn;
};

struct DiffNetParams {
  DiffNetConfig config;
  // ffn variant.
  std::vector<LinearParams> ffn_fc;
  std::vector<BnParams> ffn_bn;
  // se-resffn variant.
  std::vector<SeResBlockParams> blocks;
  BnParams head_bn;
  LinearParams head_fc1, head_fc2;
  // Shared final projection to per-attribute logits.  Initialized to all
  // zeros so a fresh model predicts exactly 0.5 everywhere.
  LinearParams out_fc;

  // Deterministic init: hidden FC weights scaled-uniform with bound
  // 1/sqrt(fan_in) in network order, biases zero, BatchNorm scale 1 /
  // shift 0 / running mean 0 / running var 1, final FC all zero.
  static DiffNetParams Init(const DiffNetConfig& config, uint64_t seed);
  static DiffNetParams Zeros(const DiffNetConfig& config);

  // Trainable tensors in stable order (optimizer + checkpoint contract).
  std::vector<ParamRef> Params(const std::string& prefix);
  // Non-trainable BatchNorm running statistics, checkpointed alongside.
  std::vector<ParamRef> Buffers(const std::string& prefix);
};

// (name, shape) of every tensor, trainable and buffers, as a pure function
// of the configuration.
std::vector<std::pair<std::string, std::vector<size_t>>> ShapeInventory(
    const DiffNetConfig& config);

struct LinearCache {
  Tensor x;
};
struct BnCache {
  bool train = false;
  Tensor x_hat;
  std::vector<double> invstd;  // per feature
};
struct ReluCache {
  std::vector<uint8_t> positive;
};
struct DropoutCache {
  bool active = false;
  double scale = 1.0;
  std::vector<uint8_t> keep;
};
struct SeCache {
  Tensor x;
  std::vector<uint8_t> hidden_positive;
  Tensor hidden;  // post-ReLU bottleneck
  Tensor gate;    // sigmoid output
};
struct SeResBlockCache {
  LinearCache fc1;
  BnCache bn1;
  ReluCache relu1;
  LinearCache fc2;
  BnCache bn2;
  SeCache se;
  LinearCache proj;
  BnCache proj_bn;
  ReluCache out_relu;
};
struct DiffNetCache {
  bool train = false;
  std::vector<LinearCache> fc;
  std::vector<BnCache> bn;
  std::vector<ReluCache> relu;
  std::vector<DropoutCache> dropout;
  std::vector<SeResBlockCache> blocks;
  BnCache head_bn;
  LinearCache head_fc1;
  ReluCache head_relu;
  LinearCache head_fc2;
  LinearCache out;
  Tensor probs;  // (batch, output_dim)
};

// Batch forward.  `x` is (batch, input_dim).  Train mode uses batch
// statistics in every BatchNorm (batch size >= 2 required, running stats
// updated in place) and draws dropout masks from `dropout_rng` in network
// order; eval mode uses running statistics and no dropout.  Probabilities
// are nudged away from exact 0/1 so the output range contract holds in
// floating point.
Tensor DiffNetForward(DiffNetParams* params, const Tensor& x, bool train,
                      Rng* dropout_rng, DiffNetCache* cache);

// Backward from the logit gradient (batch, output_dim); parameter gradients
// accumulate into `grads`, and the input gradient is written to `grad_x`
// when non-null.
void DiffNetBackward(const DiffNetParams& params, const DiffNetCache& cache,
                     const Tensor& grad_logits, DiffNetParams* grads,
                     Tensor* grad_x);

// Building blocks, exposed for focused verification.
Tensor BnForward(BnParams* params, const Tensor& x, bool train, double eps,
                 double momentum, BnCache* cache);
Tensor SeGateForward(const SeParams& se, const Tensor& x, SeCache* cache);
Tensor SeResBlockForward(SeResBlockParams* block, const Tensor& x, bool train,
                         double bn_eps, double bn_momentum,
                         SeResBlockCache* cache);

// Numerically stable logistic function.
double Sigmoid(double z);

}  // namespace vtad

#endif  // VTAD_DIFFNET_H_
