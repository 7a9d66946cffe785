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

#include "vtad/trainer.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "vtad/common.h"
#include "vtad/config.h"
#include "vtad/loss.h"
#include "vtad/optimizer.h"
#include "vtad/rng.h"

namespace vtad {
namespace {

void BuildNetConfigs(const TrainConfig& config, uint32_t feature_dim,
                     size_t num_attributes, AstpConfig* astp_config,
                     DiffNetConfig* diffnet_config) {
  astp_config->dim = feature_dim;
  astp_config->heads = config.heads;
  astp_config->attn_dim = config.attn_dim;
  astp_config->dropout = config.astp_dropout;
  astp_config->Validate();
  uint32_t pair_dim = 4 * feature_dim;  // e_A ‖ e_B, each 2×feature_dim
  if (config.variant == "ffn") {
    *diffnet_config = DiffNetConfig::Ffn(
        pair_dim, static_cast<uint32_t>(num_attributes));
    diffnet_config->dropout = config.diffnet_dropout;
  } else {
    *diffnet_config = DiffNetConfig::SeResFfn(
        pair_dim, static_cast<uint32_t>(num_attributes));
    diffnet_config->se_reduction = config.se_reduction;
  }
  diffnet_config->Validate();
}

Model ZeroModelLike(const Model& like) {
  Model g;
  g.feature_layers = like.feature_layers;
  g.feature_dim = like.feature_dim;
  g.astp = AstpParams::Zeros(like.astp.config);
  g.diffnet = DiffNetParams::Zeros(like.diffnet.config);
  return g;
}

void CheckExamplesMatchRegistry(const std::vector<PairExample>& pairs,
                                size_t num_attributes, const char* what) {
  for (const PairExample& ex : pairs) {
    if (ex.labels.size() != num_attributes ||
        ex.mask.size() != num_attributes) {
      throw ContractError(std::string(what) +
                          " examples do not match the attribute registry");
    }
  }
}

}  // namespace

void TrainConfig::Apply(const std::map<std::string, std::string>& kv) {
  for (const auto& [key, value] : kv) {
    if (key == "epochs") {
      epochs = static_cast<uint32_t>(ToUint64(value, key));
    } else if (key == "batch_size") {
      batch_size = static_cast<uint32_t>(ToUint64(value, key));
    } else if (key == "learning_rate") {
      learning_rate = ToDouble(value, key);
    } else if (key == "weight_decay") {
      weight_decay = ToDouble(value, key);
    } else if (key == "scheduler") {
      scheduler = value;
    } else if (key == "eta_min") {
      eta_min = ToDouble(value, key);
    } else if (key == "seed") {
      seed = ToUint64(value, key);
    } else if (key == "variant") {
      variant = value;
    } else if (key == "astp_trainable") {
      astp_trainable = ToBool(value, key);
    } else if (key == "loss_reduction") {
      loss_reduction = value;
    } else if (key == "heads") {
      heads = static_cast<uint32_t>(ToUint64(value, key));
    } else if (key == "attn_dim") {
      attn_dim = static_cast<uint32_t>(ToUint64(value, key));
    } else if (key == "se_reduction") {
      se_reduction = static_cast<uint32_t>(ToUint64(value, key));
    } else if (key == "astp_dropout") {
      astp_dropout = ToDouble(value, key);
    } else if (key == "diffnet_dropout") {
      diffnet_dropout = ToDouble(value, key);
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
}

void TrainConfig::Validate() const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 2) {
    throw ConfigError(
        "batch_size must be >= 2 (batch normalization needs batch "
        "statistics)");
  }
  if (learning_rate <= 0.0) throw ConfigError("learning_rate must be > 0");
  if (weight_decay < 0.0) throw ConfigError("weight_decay must be >= 0");
  if (scheduler != "cosine") {
    throw ConfigError("unknown scheduler '" + scheduler +
                      "' (expected cosine)");
  }
  if (eta_min < 0.0) throw ConfigError("eta_min must be >= 0");
  if (variant != "ffn" && variant != "se-resffn") {
    throw ConfigError("unknown variant '" + variant +
                      "' (expected ffn or se-resffn)");
  }
  if (loss_reduction != "masked-mean") {
    throw ConfigError("unknown loss_reduction '" + loss_reduction +
                      "' (expected masked-mean)");
  }
  if (heads < 1) throw ConfigError("heads must be >= 1");
  if (astp_dropout < 0.0 || astp_dropout >= 1.0 || diffnet_dropout < 0.0 ||
      diffnet_dropout >= 1.0) {
    throw ConfigError("dropout rates must be in [0, 1)");
  }
}

std::string TrainConfig::Canonical() const {
  std::string out;
  out += "epochs=" + std::to_string(epochs) + "\n";
  out += "batch_size=" + std::to_string(batch_size) + "\n";
  out += "learning_rate=" + FormatDouble(learning_rate) + "\n";
  out += "weight_decay=" + FormatDouble(weight_decay) + "\n";
  out += "scheduler=" + scheduler + "\n";
  out += "eta_min=" + FormatDouble(eta_min) + "\n";
  out += "seed=" + std::to_string(seed) + "\n";
  out += "variant=" + variant + "\n";
  out += std::string("astp_trainable=") + (astp_trainable ? "true" : "false") +
         "\n";
  out += "loss_reduction=" + loss_reduction + "\n";
  out += "heads=" + std::to_string(heads) + "\n";
  out += "attn_dim=" + std::to_string(attn_dim) + "\n";
  out += "se_reduction=" + std::to_string(se_reduction) + "\n";
  out += "astp_dropout=" + FormatDouble(astp_dropout) + "\n";
  out += "diffnet_dropout=" + FormatDouble(diffnet_dropout) + "\n";
  return out;
}

Model InitModel(const TrainConfig& config, uint32_t feature_layers,
                uint32_t feature_dim, size_t num_attributes) {
  config.Validate();
  Model m;
  m.feature_layers = feature_layers;
  m.feature_dim = feature_dim;
  AstpConfig astp_config;
  DiffNetConfig diffnet_config;
  BuildNetConfigs(config, feature_dim, num_attributes, &astp_config,
                  &diffnet_config);
  m.astp = AstpParams::Init(astp_config, DeriveSeed(config.seed, "init",
                                                    "astp"));
  m.diffnet = DiffNetParams::Init(diffnet_config,
                                  DeriveSeed(config.seed, "init", "diffnet"));
  return m;
}

std::vector<ParamRef> ModelParams(Model* model) {
  std::vector<ParamRef> refs = model->astp.Params("astp");
  for (ParamRef& r : model->diffnet.Params("diffnet")) refs.push_back(r);
  return refs;
}

std::vector<ParamRef> ModelBuffers(Model* model) {
  return model->diffnet.Buffers("diffnet");
}

std::vector<ParamRef> TrainableParams(Model* model, bool astp_trainable) {
  if (astp_trainable) return ModelParams(model);
  return model->diffnet.Params("diffnet");
}

std::vector<double> PredictPair(Model* model, const Tensor& stack_a,
                                const Tensor& stack_b) {
  std::vector<double> ea =
      AstpForward(model->astp, stack_a, false, nullptr, nullptr);
  std::vector<double> eb =
      AstpForward(model->astp, stack_b, false, nullptr, nullptr);
  Tensor ep = Tensor::Zeros({1, ea.size() + eb.size()});
  std::copy(ea.begin(), ea.end(), ep.v.begin());
  std::copy(eb.begin(), eb.end(), ep.v.begin() + ea.size());
  Tensor probs = DiffNetForward(&model->diffnet, ep, false, nullptr, nullptr);
  return probs.v;
}

RestoredModel ModelFromCheckpoint(const Checkpoint& checkpoint) {
  TrainConfig config;
  config.Apply(ParseKeyValueText(checkpoint.config_text, "checkpoint config"));
  config.Validate();
  std::vector<std::string> names;
  {
    std::istringstream lines(checkpoint.registry_text);
    std::string line;
    while (std::getline(lines, line)) {
      std::string name = StripSpace(line);
      if (!name.empty()) names.push_back(name);
    }
  }
  AttributeRegistry registry = AttributeRegistry::FromNames(names);

  Model model;
  model.feature_layers = checkpoint.feature_layers;
  model.feature_dim = checkpoint.feature_dim;
  AstpConfig astp_config;
  DiffNetConfig diffnet_config;
  BuildNetConfigs(config, checkpoint.feature_dim, registry.NumAttributes(),
                  &astp_config, &diffnet_config);
  model.astp = AstpParams::Zeros(astp_config);
  model.diffnet = DiffNetParams::Zeros(diffnet_config);
  for (ParamRef& ref : ModelParams(&model)) {
    const Tensor& stored = checkpoint.Find(ref.name);
    if (stored.shape != ref.tensor->shape) {
      throw FormatError("checkpoint tensor '" + ref.name +
                        "' has an unexpected shape");
    }
    *ref.tensor = stored;
  }
  for (ParamRef& ref : ModelBuffers(&model)) {
    const Tensor& stored = checkpoint.Find(ref.name);
    if (stored.shape != ref.tensor->shape) {
      throw FormatError("checkpoint tensor '" + ref.name +
                        "' has an unexpected shape");
    }
    *ref.tensor = stored;
  }
  return RestoredModel{std::move(config), std::move(names), std::move(model)};
}

TrainResult Train(const TrainConfig& config, const AttributeRegistry& registry,
                  const std::vector<PairExample>& train_pairs,
                  const std::vector<PairExample>& val_pairs,
                  FeatureProvider* provider, const TrainOptions& options) {
  config.Validate();
  if (provider == nullptr) throw ContractError("feature provider is null");
  if (train_pairs.empty()) throw InputError("training pair list is empty");
  if (val_pairs.empty()) throw InputError("validation pair list is empty");
  size_t num_attributes = registry.NumAttributes();
  CheckExamplesMatchRegistry(train_pairs, num_attributes, "training");
  CheckExamplesMatchRegistry(val_pairs, num_attributes, "validation");

  // Frozen upstream: stacks are fetched once and reused verbatim.
  std::map<std::string, Tensor> stacks;
  uint32_t feature_layers = 0;
  uint32_t feature_dim = 0;
  auto get_stack = [&](const std::string& id) -> const Tensor& {
    auto it = stacks.find(id);
    if (it == stacks.end()) {
      LayerStack s = provider->Get(id);
      if (feature_dim == 0) {
        feature_layers = s.num_layers;
        feature_dim = s.dim;
      } else if (s.num_layers != feature_layers || s.dim != feature_dim) {
        throw InputError("layer stack for '" + id + "' has shape " +
                         std::to_string(s.num_layers) + "x" +
                         std::to_string(s.dim) + ", expected " +
                         std::to_string(feature_layers) + "x" +
                         std::to_string(feature_dim));
      }
      it = stacks.emplace(id, StackToTensor(s)).first;
    }
    return it->second;
  };
  get_stack(train_pairs.front().utt_a);

  Model model = InitModel(config, feature_layers, feature_dim,
                          num_attributes);
  AdamW optimizer(TrainableParams(&model, config.astp_trainable), 0.9, 0.999,
                  1e-8, config.weight_decay);

  size_t n = train_pairs.size();
  size_t full_batches = n / config.batch_size;
  size_t remainder = n % config.batch_size;
  size_t steps_per_epoch = full_batches + (remainder >= 2 ? 1 : 0);
  if (steps_per_epoch == 0) {
    throw InputError(
        "training set cannot form a single batch of size >= 2");
  }
  uint64_t total_steps =
      static_cast<uint64_t>(config.epochs) * steps_per_epoch;

  uint32_t start_epoch = 0;
  uint64_t global_step = 0;
  if (options.resume != nullptr) {
    const Checkpoint& ck = *options.resume;
    if (!options.force) {
      if (ck.config_text != config.Canonical()) {
        throw ConfigError(
            "checkpoint was produced under a different training config "
            "(use force to override)");
      }
      if (ck.registry_text != registry.CanonicalText()) {
        throw ConfigError(
            "checkpoint was produced under a different attribute registry "
            "(use force to override)");
      }
    }
    if (ck.feature_layers != feature_layers ||
        ck.feature_dim != feature_dim) {
      throw InputError("checkpoint expects " +
                       std::to_string(ck.feature_layers) + "x" +
                       std::to_string(ck.feature_dim) +
                       " layer stacks, provider yields " +
                       std::to_string(feature_layers) + "x" +
                       std::to_string(feature_dim));
    }
    if (ck.total_steps != total_steps) {
      throw ConfigError(
          "checkpoint step budget " + std::to_string(ck.total_steps) +
          " does not match this run's " + std::to_string(total_steps) +
          " (training data or epoch count changed)");
    }
    if (ck.epoch > config.epochs) {
      throw ConfigError("checkpoint is past this run's epoch budget");
    }
    if (ck.global_step !=
        static_cast<uint64_t>(ck.epoch) * steps_per_epoch) {
      throw FormatError(
          "checkpoint step counter is inconsistent with its epoch index");
    }
    for (ParamRef& ref : ModelParams(&model)) {
      const Tensor& stored = ck.Find(ref.name);
      if (stored.shape != ref.tensor->shape) {
        throw FormatError("checkpoint tensor '" + ref.name +
                          "' has an unexpected shape");
      }
      *ref.tensor = stored;
    }
    for (ParamRef& ref : ModelBuffers(&model)) {
      const Tensor& stored = ck.Find(ref.name);
      if (stored.shape != ref.tensor->shape) {
        throw FormatError("checkpoint tensor '" + ref.name +
                          "' has an unexpected shape");
      }
      *ref.tensor = stored;
    }
    std::vector<Tensor> m_state, v_state;
    for (ParamRef& ref : TrainableParams(&model, config.astp_trainable)) {
      m_state.push_back(ck.Find("adam.m." + ref.name));
      v_state.push_back(ck.Find("adam.v." + ref.name));
    }
    optimizer.RestoreState(std::move(m_state), std::move(v_state),
                           ck.global_step);
    start_epoch = ck.epoch;
    global_step = ck.global_step;
  }

  uint32_t end_epoch = config.epochs;
  if (options.stop_after_epochs > 0 && options.stop_after_epochs < end_epoch) {
    end_epoch = options.stop_after_epochs;
  }
  if (start_epoch > end_epoch) {
    throw ConfigError("checkpoint is already past the requested stop epoch");
  }

  TrainResult result;
  auto emit = [&](const std::string& line) {
    result.log_lines.push_back(line);
    if (options.log_stream != nullptr) {
      *options.log_stream << line << "\n" << std::flush;
    }
  };
  uint64_t provenance =
      ConfigFingerprint(config.Canonical(), registry.CanonicalText());
  emit(std::string("# ") + ArtifactVersion() + " config=" +
       ToHex(provenance));

  // Eval-mode validation pass: per-sample masked loss mean and pooled
  // trial accuracy at threshold 0.5.
  auto validate = [&]() {
    std::map<std::string, std::vector<double>> embeddings;
    auto embed = [&](const std::string& id) -> const std::vector<double>& {
      auto it = embeddings.find(id);
      if (it == embeddings.end()) {
        it = embeddings
                 .emplace(id, AstpForward(model.astp, get_stack(id), false,
                                          nullptr, nullptr))
                 .first;
      }
      return it->second;
    };
    double loss_sum = 0.0;
    size_t correct = 0;
    size_t trials = 0;
    size_t pos = 0;
    while (pos < val_pairs.size()) {
      size_t take = std::min(static_cast<size_t>(config.batch_size),
                             val_pairs.size() - pos);
      Tensor ep = Tensor::Zeros({take, 4 * static_cast<size_t>(feature_dim)});
      for (size_t b = 0; b < take; ++b) {
        const PairExample& ex = val_pairs[pos + b];
        const std::vector<double>& ea = embed(ex.utt_a);
        const std::vector<double>& eb = embed(ex.utt_b);
        std::copy(ea.begin(), ea.end(), ep.v.begin() + b * 4 * feature_dim);
        std::copy(eb.begin(), eb.end(),
                  ep.v.begin() + b * 4 * feature_dim + ea.size());
      }
      Tensor probs =
          DiffNetForward(&model.diffnet, ep, false, nullptr, nullptr);
      for (size_t b = 0; b < take; ++b) {
        const PairExample& ex = val_pairs[pos + b];
        std::vector<double> row(probs.v.begin() + b * num_attributes,
                                probs.v.begin() + (b + 1) * num_attributes);
        loss_sum += MaskedBceSample(row, ex.labels, ex.mask);
        for (size_t j = 0; j < num_attributes; ++j) {
          if (!ex.mask[j]) continue;
          uint8_t pred = row[j] >= 0.5 ? 1 : 0;
          if (pred == ex.labels[j]) ++correct;
          ++trials;
        }
      }
      pos += take;
    }
    double val_loss = loss_sum / static_cast<double>(val_pairs.size());
    double val_acc =
        100.0 * static_cast<double>(correct) / static_cast<double>(trials);
    return std::make_pair(val_loss, val_acc);
  };

  for (uint32_t epoch = start_epoch; epoch < end_epoch; ++epoch) {
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng(
        DeriveSeed(config.seed, "shuffle", static_cast<uint64_t>(epoch)));
    for (size_t i = n; i-- > 1;) {
      size_t j = static_cast<size_t>(shuffle_rng.Below(i + 1));
      std::swap(order[i], order[j]);
    }

    double epoch_loss_sum = 0.0;
    size_t steps_done = 0;
    size_t pos = 0;
    while (pos < n) {
      size_t take = std::min(static_cast<size_t>(config.batch_size), n - pos);
      if (take < 2) break;  // trailing singleton cannot be normalized

      double lr = CosineLr(global_step, total_steps, config.learning_rate,
                           config.eta_min);
      Rng dropout_rng(DeriveSeed(config.seed, "dropout", global_step));

      Tensor ep = Tensor::Zeros({take, 4 * static_cast<size_t>(feature_dim)});
      std::vector<AstpCache> cache_a(take), cache_b(take);
      std::vector<std::vector<uint8_t>> labels(take), masks(take);
      for (size_t b = 0; b < take; ++b) {
        const PairExample& ex = train_pairs[order[pos + b]];
        std::vector<double> ea = AstpForward(model.astp, get_stack(ex.utt_a),
                                             true, &dropout_rng, &cache_a[b]);
        std::vector<double> eb = AstpForward(model.astp, get_stack(ex.utt_b),
                                             true, &dropout_rng, &cache_b[b]);
        std::copy(ea.begin(), ea.end(), ep.v.begin() + b * 4 * feature_dim);
        std::copy(eb.begin(), eb.end(),
                  ep.v.begin() + b * 4 * feature_dim + ea.size());
        labels[b] = ex.labels;
        masks[b] = ex.mask;
      }
      DiffNetCache head_cache;
      Tensor probs =
          DiffNetForward(&model.diffnet, ep, true, &dropout_rng, &head_cache);
      double loss = MaskedBceBatch(probs, labels, masks);
      if (!std::isfinite(loss)) {
        throw Error("training aborted: non-finite loss at epoch " +
                    std::to_string(epoch + 1) + ", step " +
                    std::to_string(global_step + 1) + ", lr " +
                    FormatDouble(lr));
      }

      Model grads = ZeroModelLike(model);
      Tensor grad_logits = MaskedBceGradWrtLogits(probs, labels, masks);
      Tensor grad_ep;
      DiffNetBackward(model.diffnet, head_cache, grad_logits, &grads.diffnet,
                      config.astp_trainable ? &grad_ep : nullptr);
      if (config.astp_trainable) {
        size_t embed_dim = 2 * static_cast<size_t>(feature_dim);
        for (size_t b = 0; b < take; ++b) {
          const double* row = grad_ep.v.data() + b * 4 * feature_dim;
          std::vector<double> ga(row, row + embed_dim);
          std::vector<double> gb(row + embed_dim, row + 2 * embed_dim);
          AstpBackward(model.astp, cache_a[b], ga, &grads.astp, nullptr);
          AstpBackward(model.astp, cache_b[b], gb, &grads.astp, nullptr);
        }
      }
      optimizer.Step(TrainableParams(&grads, config.astp_trainable), lr);

      ++global_step;
      ++steps_done;
      pos += take;
      epoch_loss_sum += loss;
      emit("step epoch=" + std::to_string(epoch + 1) + " step=" +
           std::to_string(global_step) + " lr=" + FormatDouble(lr) +
           " loss=" + FormatDouble(loss));
    }

    auto [val_loss, val_acc] = validate();
    result.final_val_loss = val_loss;
    result.final_val_acc = val_acc;
    emit("epoch epoch=" + std::to_string(epoch + 1) + " train_loss=" +
         FormatDouble(epoch_loss_sum / static_cast<double>(steps_done)) +
         " val_loss=" + FormatDouble(val_loss) + " val_acc=" +
         FormatDouble(val_acc));
  }

  Checkpoint ck;
  ck.config_text = config.Canonical();
  ck.registry_text = registry.CanonicalText();
  ck.epoch = end_epoch;
  ck.global_step = global_step;
  ck.total_steps = total_steps;
  ck.feature_layers = feature_layers;
  ck.feature_dim = feature_dim;
  for (ParamRef& ref : ModelParams(&model)) {
    ck.tensors.emplace_back(ref.name, *ref.tensor);
  }
  for (ParamRef& ref : ModelBuffers(&model)) {
    ck.tensors.emplace_back(ref.name, *ref.tensor);
  }
  std::vector<ParamRef> trainable =
      TrainableParams(&model, config.astp_trainable);
  for (size_t i = 0; i < trainable.size(); ++i) {
    ck.tensors.emplace_back("adam.m." + trainable[i].name,
                            optimizer.FirstMoments()[i]);
    ck.tensors.emplace_back("adam.v." + trainable[i].name,
                            optimizer.SecondMoments()[i]);
  }
  result.checkpoint = std::move(ck);
  result.completed = end_epoch == config.epochs;
  return result;
}

}  // namespace vtad
