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

#ifndef VTAD_TRAINER_H_
#define VTAD_TRAINER_H_

#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "vtad/astp.h"
#include "vtad/attributes.h"
#include "vtad/checkpoint.h"
#include "vtad/diffnet.h"
#include "vtad/feature_provider.h"
#include "vtad/pairs.h"

namespace vtad {

// Training hyperparameters.  Every field has a config-file key of the same
// name; Canonical() renders a stable text form that is embedded in
// checkpoints and hashed into provenance headers.
struct TrainConfig {
  uint32_t epochs = 10;
  uint32_t batch_size = 16;
  double learning_rate = 1e-4;
  double weight_decay = 0.01;
  std::string scheduler = "cosine";
  double eta_min = 0.0;
  uint64_t seed = 42;
  std::string variant = "ffn";  // comparison head variant
  bool astp_trainable = true;
  std::string loss_reduction = "masked-mean";
  uint32_t heads = 8;
  uint32_t attn_dim = 0;  // 0 → feature_dim / heads
  uint32_t se_reduction = 16;
  double astp_dropout = 0.1;
  double diffnet_dropout = 0.3;

  static TrainConfig Defaults() { return TrainConfig(); }
  // Applies key=value overrides; unknown keys → ConfigError.
  void Apply(const std::map<std::string, std::string>& kv);
  void Validate() const;
  std::string Canonical() const;
};

// The trainable pipeline downstream of the frozen encoder: layer pooling
// plus the comparison head.
struct Model {
  AstpParams astp;
  DiffNetParams diffnet;
  uint32_t feature_layers = 0;  // expected stack shape
  uint32_t feature_dim = 0;
};

// Builds a freshly initialized model; pooling and head init streams are
// derived from config.seed.
Model InitModel(const TrainConfig& config, uint32_t feature_layers,
                uint32_t feature_dim, size_t num_attributes);

// Parameter listings (stable order shared by optimizer and checkpoints).
std::vector<ParamRef> ModelParams(Model* model);
std::vector<ParamRef> ModelBuffers(Model* model);
std::vector<ParamRef> TrainableParams(Model* model, bool astp_trainable);

/// Eval-mode pair scoring used by validation, evaluation, and prediction:
// pools both utterances, concatenates the embeddings, and runs the head.
std::vector<double> PredictPair(Model* model, const Tensor& stack_a,
                                const Tensor& stack_b);

struct RestoredModel {
  TrainConfig config;
  std::vector<std::string> registry_names;
  Model model;
};

// Rebuilds a model from checkpoint contents (shape and name checked).
RestoredModel ModelFromCheckpoint(const Checkpoint& checkpoint);

struct TrainOptions {
  uint32_t stop_after_epochs = 0;     // 0 = train to config.epochs
  const Checkpoint* resume = nullptr;  // continue from this state
  bool force = false;                  // accept a mismatched resume config
  std::ostream* log_stream = nullptr;  // live log sink (optional)
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<std::string> log_lines;
  bool completed = false;  // reached config.epochs
  double final_val_acc = 0.0;
  double final_val_loss = 0.0;
};

// Runs the training loop: per-epoch shuffling, mini-batches (a trailing
// batch of size 1 is dropped — batch statistics need two samples), fused
// loss gradient, decoupled-weight-decay updates, per-step cosine learning
// rate, eval-mode validation after every epoch, and deterministic replay —
// all stochastic streams are derived from (config.seed, purpose, counter),
// so resuming from a checkpoint reproduces an uninterrupted run exactly.
TrainResult Train(const TrainConfig& config, const AttributeRegistry& registry,
                  const std::vector<PairExample>& train_pairs,
                  const std::vector<PairExample>& val_pairs,
                  FeatureProvider* provider, const TrainOptions& options);

}  // namespace vtad

#endif  // VTAD_TRAINER_H_
