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

#include "vtad/diffnet.h"

#include <algorithm>
#include <cmath>

#include "vtad/common.h"
#include "vtad/rng.h"

namespace vtad {
namespace {

// Keeps reported probabilities strictly inside (0,1) even when the sigmoid
// saturates in double precision.
constexpr double kProbMargin = 1e-12;

LinearParams MakeLinear(size_t out, size_t in) {
  LinearParams p;
  p.w = Tensor::Zeros({out, in});
  p.b = Tensor::Zeros({out});
  return p;
}

BnParams MakeBn(size_t dim) {
  BnParams p;
  p.gamma = Tensor::Zeros({dim});
  p.beta = Tensor::Zeros({dim});
  p.running_mean = Tensor::Zeros({dim});
  p.running_var = Tensor::Zeros({dim});
  return p;
}

void ResetBn(BnParams* p) {
  p->gamma.Fill(1.0);
  p->beta.Fill(0.0);
  p->running_mean.Fill(0.0);
  p->running_var.Fill(1.0);
}

void InitLinear(LinearParams* p, Rng* rng) {
  double bound = 1.0 / std::sqrt(static_cast<double>(p->w.Cols()));
  p->w.FillUniform(rng, bound);
  p->b.Fill(0.0);
}

Tensor LinearForward(const LinearParams& p, const Tensor& x,
                     LinearCache* cache) {
  size_t out_dim = p.w.Rows();
  size_t in_dim = p.w.Cols();
  if (x.Rank() != 2 || x.Cols() != in_dim) {
    throw ContractError("linear layer input shape mismatch");
  }
  size_t batch = x.Rows();
  Tensor y = Tensor::Zeros({batch, out_dim});
  for (size_t i = 0; i < batch; ++i) {
    const double* xi = x.v.data() + i * in_dim;
    double* yi = y.v.data() + i * out_dim;
    for (size_t o = 0; o < out_dim; ++o) {
      const double* wo = p.w.v.data() + o * in_dim;
      double acc = p.b.v[o];
      for (size_t c = 0; c < in_dim; ++c) acc += wo[c] * xi[c];
      yi[o] = acc;
    }
  }
  if (cache != nullptr) cache->x = x;
  return y;
}

// Accumulates into grads and (when non-null) into *gx.
void LinearBackward(const LinearParams& p, const LinearCache& cache,
                    const Tensor& gy, LinearParams* grads, Tensor* gx) {
  size_t out_dim = p.w.Rows();
  size_t in_dim = p.w.Cols();
  size_t batch = cache.x.Rows();
  for (size_t i = 0; i < batch; ++i) {
    const double* xi = cache.x.v.data() + i * in_dim;
    const double* gyi = gy.v.data() + i * out_dim;
    double* gxi = gx != nullptr ? gx->v.data() + i * in_dim : nullptr;
    for (size_t o = 0; o < out_dim; ++o) {
      double g = gyi[o];
      grads->b.v[o] += g;
      double* gwo = grads->w.v.data() + o * in_dim;
      const double* wo = p.w.v.data() + o * in_dim;
      for (size_t c = 0; c < in_dim; ++c) {
        gwo[c] += g * xi[c];
        if (gxi != nullptr) gxi[c] += g * wo[c];
      }
    }
  }
}

Tensor ReluForward(const Tensor& x, ReluCache* cache) {
  Tensor y = x;
  if (cache != nullptr) cache->positive.assign(x.v.size(), 0);
  for (size_t i = 0; i < y.v.size(); ++i) {
    if (y.v[i] > 0.0) {
      if (cache != nullptr) cache->positive[i] = 1;
    } else {
      y.v[i] = 0.0;
    }
  }
  return y;
}

Tensor ReluBackward(const ReluCache& cache, const Tensor& gy) {
  Tensor gx = gy;
  for (size_t i = 0; i < gx.v.size(); ++i) {
    if (!cache.positive[i]) gx.v[i] = 0.0;
  }
  return gx;
}

Tensor DropoutForward(const Tensor& x, double rate, Rng* rng,
                      DropoutCache* cache) {
  cache->active = true;
  cache->scale = 1.0 / (1.0 - rate);
  cache->keep.assign(x.v.size(), 1);
  Tensor y = x;
  for (size_t i = 0; i < y.v.size(); ++i) {
    if (rng->U01() < rate) {
      cache->keep[i] = 0;
      y.v[i] = 0.0;
    } else {
      y.v[i] *= cache->scale;
    }
  }
  return y;
}

Tensor DropoutBackward(const DropoutCache& cache, const Tensor& gy) {
  Tensor gx = gy;
  for (size_t i = 0; i < gx.v.size(); ++i) {
    gx.v[i] = cache.keep[i] ? gx.v[i] * cache.scale : 0.0;
  }
  return gx;
}

// Returns the input gradient; accumulates gamma/beta gradients.
Tensor BnBackward(const BnParams& p, const BnCache& cache, const Tensor& gy,
                  BnParams* grads) {
  size_t batch = gy.Rows();
  size_t dim = gy.Cols();
  Tensor gx = Tensor::Zeros(gy.shape);
  for (size_t j = 0; j < dim; ++j) {
    double sum_g = 0.0;
    double sum_gx = 0.0;
    for (size_t i = 0; i < batch; ++i) {
      double g = gy.v[i * dim + j];
      sum_g += g;
      sum_gx += g * cache.x_hat.v[i * dim + j];
    }
    grads->beta.v[j] += sum_g;
    grads->gamma.v[j] += sum_gx;
    double scale = p.gamma.v[j] * cache.invstd[j];
    if (cache.train) {
      double mean_g = sum_g / static_cast<double>(batch);
      double mean_gx = sum_gx / static_cast<double>(batch);
      for (size_t i = 0; i < batch; ++i) {
        double g = gy.v[i * dim + j];
        double xh = cache.x_hat.v[i * dim + j];
        gx.v[i * dim + j] = scale * (g - mean_g - xh * mean_gx);
      }
    } else {
      for (size_t i = 0; i < batch; ++i) {
        gx.v[i * dim + j] = scale * gy.v[i * dim + j];
      }
    }
  }
  return gx;
}

void SeBackward(const SeParams& se, const SeCache& cache, const Tensor& gy,
                SeParams* grads, Tensor* gx) {
  size_t batch = gy.Rows();
  size_t dim = gy.Cols();
  // y = x ⊙ g: the input feeds both the product and the gate path.
  Tensor g_gate = Tensor::Zeros(gy.shape);
  for (size_t i = 0; i < gy.v.size(); ++i) {
    gx->v[i] += cache.gate.v[i] * gy.v[i];
    double g = cache.gate.v[i];
    g_gate.v[i] = cache.x.v[i] * gy.v[i] * g * (1.0 - g);
  }
  size_t bottleneck = se.fc1.w.Rows();
  Tensor g_hidden = Tensor::Zeros({batch, bottleneck});
  LinearCache fc2_cache;
  fc2_cache.x = cache.hidden;
  LinearBackward(se.fc2, fc2_cache, g_gate, &grads->fc2, &g_hidden);
  for (size_t i = 0; i < g_hidden.v.size(); ++i) {
    if (!cache.hidden_positive[i]) g_hidden.v[i] = 0.0;
  }
  (void)dim;
  LinearCache fc1_cache;
  fc1_cache.x = cache.x;
  LinearBackward(se.fc1, fc1_cache, g_hidden, &grads->fc1, gx);
}

// Returns the block's input gradient.
Tensor SeResBlockBackward(const SeResBlockParams& block,
                          const SeResBlockCache& cache, const Tensor& gy,
                          SeResBlockParams* grads) {
  Tensor g_pre = ReluBackward(cache.out_relu, gy);
  // Main path.
  size_t batch = g_pre.Rows();
  size_t d_out = g_pre.Cols();
  Tensor g_main = Tensor::Zeros({batch, d_out});
  SeBackward(block.se, cache.se, g_pre, &grads->se, &g_main);
  Tensor g_bn2 = BnBackward(block.bn2, cache.bn2, g_main, &grads->bn2);
  Tensor g_relu1_out = Tensor::Zeros({batch, d_out});
  LinearBackward(block.fc2, cache.fc2, g_bn2, &grads->fc2, &g_relu1_out);
  Tensor g_bn1_out = ReluBackward(cache.relu1, g_relu1_out);
  Tensor g_fc1_out = BnBackward(block.bn1, cache.bn1, g_bn1_out, &grads->bn1);
  size_t d_in = block.fc1.w.Cols();
  Tensor gx = Tensor::Zeros({batch, d_in});
  LinearBackward(block.fc1, cache.fc1, g_fc1_out, &grads->fc1, &gx);
  // Shortcut.
  if (block.has_projection) {
    Tensor g_proj =
        BnBackward(block.proj_bn, cache.proj_bn, g_pre, &grads->proj_bn);
    LinearBackward(block.proj, cache.proj, g_proj, &grads->proj, &gx);
  } else {
    for (size_t i = 0; i < gx.v.size(); ++i) gx.v[i] += g_pre.v[i];
  }
  return gx;
}

}  // namespace

double Sigmoid(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  double e = std::exp(z);
  return e / (1.0 + e);
}

DiffNetConfig DiffNetConfig::Ffn(uint32_t input_dim, uint32_t output_dim) {
  DiffNetConfig c;
  c.variant = "ffn";
  c.input_dim = input_dim;
  c.output_dim = output_dim;
  c.hidden = {512, 256, 128, 64};
  c.dropout = 0.3;
  return c;
}

DiffNetConfig DiffNetConfig::SeResFfn(uint32_t input_dim,
                                      uint32_t output_dim) {
  DiffNetConfig c;
  c.variant = "se-resffn";
  c.input_dim = input_dim;
  c.output_dim = output_dim;
  c.hidden = {1024, 1024, 512, 256};
  c.head_hidden = {192, 64};
  c.dropout = 0.0;
  return c;
}

void DiffNetConfig::Validate() const {
  if (variant != "ffn" && variant != "se-resffn") {
    throw ConfigError("unknown comparison-head variant '" + variant +
                      "' (expected ffn or se-resffn)");
  }
  if (input_dim == 0 || output_dim == 0) {
    throw ConfigError("comparison head needs positive input/output dims");
  }
  if (hidden.empty()) {
    throw ConfigError("comparison head needs at least one hidden width");
  }
  for (uint32_t h : hidden) {
    if (h == 0) throw ConfigError("zero hidden width");
  }
  if (dropout < 0.0 || dropout >= 1.0) {
    throw ConfigError("dropout rate must be in [0, 1)");
  }
  if (bn_eps <= 0.0) throw ConfigError("batch-norm epsilon must be > 0");
  if (bn_momentum <= 0.0 || bn_momentum > 1.0) {
    throw ConfigError("batch-norm momentum must be in (0, 1]");
  }
  if (IsSe()) {
    if (head_hidden.size() != 2 || head_hidden[0] == 0 ||
        head_hidden[1] == 0) {
      throw ConfigError("se-resffn needs exactly two head widths");
    }
    if (se_reduction == 0) throw ConfigError("SE reduction must be >= 1");
    for (uint32_t h : hidden) {
      if (h % se_reduction != 0) {
        throw ConfigError("SE reduction " + std::to_string(se_reduction) +
                          " must divide block width " + std::to_string(h));
      }
    }
  }
}

DiffNetParams DiffNetParams::Zeros(const DiffNetConfig& config) {
  config.Validate();
  DiffNetParams p;
  p.config = config;
  if (config.IsSe()) {
    size_t d_in = config.input_dim;
    for (uint32_t width : config.hidden) {
      SeResBlockParams block;
      block.fc1 = MakeLinear(width, d_in);
      block.bn1 = MakeBn(width);
      block.fc2 = MakeLinear(width, width);
      block.bn2 = MakeBn(width);
      block.se.fc1 = MakeLinear(width / config.se_reduction, width);
      block.se.fc2 = MakeLinear(width, width / config.se_reduction);
      block.has_projection = d_in != width;
      if (block.has_projection) {
        block.proj = MakeLinear(width, d_in);
        block.proj_bn = MakeBn(width);
      }
      p.blocks.push_back(std::move(block));
      d_in = width;
    }
    p.head_bn = MakeBn(config.hidden.back());
    p.head_fc1 = MakeLinear(config.head_hidden[0], config.hidden.back());
    p.head_fc2 = MakeLinear(config.head_hidden[1], config.head_hidden[0]);
    p.out_fc = MakeLinear(config.output_dim, config.head_hidden[1]);
  } else {
    size_t d_in = config.input_dim;
    for (uint32_t width : config.hidden) {
      p.ffn_fc.push_back(MakeLinear(width, d_in));
      p.ffn_bn.push_back(MakeBn(width));
      d_in = width;
    }
    p.out_fc = MakeLinear(config.output_dim, config.hidden.back());
  }
  return p;
}

DiffNetParams DiffNetParams::Init(const DiffNetConfig& config,
                                  uint64_t seed) {
  DiffNetParams p = Zeros(config);
  Rng rng(seed);
  if (config.IsSe()) {
    for (SeResBlockParams& block : p.blocks) {
      InitLinear(&block.fc1, &rng);
      ResetBn(&block.bn1);
      InitLinear(&block.fc2, &rng);
      ResetBn(&block.bn2);
      InitLinear(&block.se.fc1, &rng);
      InitLinear(&block.se.fc2, &rng);
      if (block.has_projection) {
        InitLinear(&block.proj, &rng);
        ResetBn(&block.proj_bn);
      }
    }
    ResetBn(&p.head_bn);
    InitLinear(&p.head_fc1, &rng);
    InitLinear(&p.head_fc2, &rng);
  } else {
    for (size_t i = 0; i < p.ffn_fc.size(); ++i) {
      InitLinear(&p.ffn_fc[i], &rng);
      ResetBn(&p.ffn_bn[i]);
    }
  }
  // The output layer stays all-zero: every attribute starts at probability
  // exactly 1/2, which keeps early training symmetric.
  return p;
}

namespace {

void PushLinear(std::vector<ParamRef>* refs, const std::string& name,
                LinearParams* p) {
  refs->push_back({name + ".w", &p->w});
  refs->push_back({name + ".b", &p->b});
}

void PushBn(std::vector<ParamRef>* refs, const std::string& name,
            BnParams* p) {
  refs->push_back({name + ".gamma", &p->gamma});
  refs->push_back({name + ".beta", &p->beta});
}

void PushBnBuffers(std::vector<ParamRef>* refs, const std::string& name,
                   BnParams* p) {
  refs->push_back({name + ".rm", &p->running_mean});
  refs->push_back({name + ".rv", &p->running_var});
}

}  // namespace

std::vector<ParamRef> DiffNetParams::Params(const std::string& prefix) {
  std::vector<ParamRef> refs;
  if (config.IsSe()) {
    for (size_t i = 0; i < blocks.size(); ++i) {
      std::string base = prefix + ".block" + std::to_string(i);
      PushLinear(&refs, base + ".fc1", &blocks[i].fc1);
      PushBn(&refs, base + ".bn1", &blocks[i].bn1);
      PushLinear(&refs, base + ".fc2", &blocks[i].fc2);
      PushBn(&refs, base + ".bn2", &blocks[i].bn2);
      PushLinear(&refs, base + ".se.fc1", &blocks[i].se.fc1);
      PushLinear(&refs, base + ".se.fc2", &blocks[i].se.fc2);
      if (blocks[i].has_projection) {
        PushLinear(&refs, base + ".proj", &blocks[i].proj);
        PushBn(&refs, base + ".proj_bn", &blocks[i].proj_bn);
      }
    }
    PushBn(&refs, prefix + ".head_bn", &head_bn);
    PushLinear(&refs, prefix + ".head_fc1", &head_fc1);
    PushLinear(&refs, prefix + ".head_fc2", &head_fc2);
  } else {
    for (size_t i = 0; i < ffn_fc.size(); ++i) {
      std::string base = prefix + ".block" + std::to_string(i);
      PushLinear(&refs, base + ".fc", &ffn_fc[i]);
      PushBn(&refs, base + ".bn", &ffn_bn[i]);
    }
  }
  PushLinear(&refs, prefix + ".out", &out_fc);
  return refs;
}

std::vector<ParamRef> DiffNetParams::Buffers(const std::string& prefix) {
  std::vector<ParamRef> refs;
  if (config.IsSe()) {
    for (size_t i = 0; i < blocks.size(); ++i) {
      std::string base = prefix + ".block" + std::to_string(i);
      PushBnBuffers(&refs, base + ".bn1", &blocks[i].bn1);
      PushBnBuffers(&refs, base + ".bn2", &blocks[i].bn2);
      if (blocks[i].has_projection) {
        PushBnBuffers(&refs, base + ".proj_bn", &blocks[i].proj_bn);
      }
    }
    PushBnBuffers(&refs, prefix + ".head_bn", &head_bn);
  } else {
    for (size_t i = 0; i < ffn_bn.size(); ++i) {
      std::string base = prefix + ".block" + std::to_string(i);
      PushBnBuffers(&refs, base + ".bn", &ffn_bn[i]);
    }
  }
  return refs;
}

std::vector<std::pair<std::string, std::vector<size_t>>> ShapeInventory(
    const DiffNetConfig& config) {
  DiffNetParams p = DiffNetParams::Zeros(config);
  std::vector<std::pair<std::string, std::vector<size_t>>> out;
  for (const ParamRef& ref : p.Params("diffnet")) {
    out.emplace_back(ref.name, ref.tensor->shape);
  }
  for (const ParamRef& ref : p.Buffers("diffnet")) {
    out.emplace_back(ref.name, ref.tensor->shape);
  }
  return out;
}

Tensor BnForward(BnParams* params, const Tensor& x, bool train, double eps,
                 double momentum, BnCache* cache) {
  size_t dim = params->gamma.v.size();
  if (x.Rank() != 2 || x.Cols() != dim) {
    throw ContractError("batch-norm input shape mismatch");
  }
  size_t batch = x.Rows();
  if (train && batch < 2) {
    throw InputError(
        "train-mode batch normalization needs batch size >= 2 (batch "
        "statistics are undefined for a single sample)");
  }
  Tensor y = Tensor::Zeros(x.shape);
  if (cache != nullptr) {
    cache->train = train;
    cache->x_hat = Tensor::Zeros(x.shape);
    cache->invstd.assign(dim, 0.0);
  }
  for (size_t j = 0; j < dim; ++j) {
    double mean, var;
    if (train) {
      double sum = 0.0;
      for (size_t i = 0; i < batch; ++i) sum += x.v[i * dim + j];
      mean = sum / static_cast<double>(batch);
      double sq = 0.0;
      for (size_t i = 0; i < batch; ++i) {
        double d = x.v[i * dim + j] - mean;
        sq += d * d;
      }
      var = sq / static_cast<double>(batch);  // biased
      params->running_mean.v[j] =
          (1.0 - momentum) * params->running_mean.v[j] + momentum * mean;
      params->running_var.v[j] =
          (1.0 - momentum) * params->running_var.v[j] + momentum * var;
    } else {
      mean = params->running_mean.v[j];
      var = params->running_var.v[j];
    }
    double invstd = 1.0 / std::sqrt(var + eps);
    if (cache != nullptr) cache->invstd[j] = invstd;
    double gamma = params->gamma.v[j];
    double beta = params->beta.v[j];
    for (size_t i = 0; i < batch; ++i) {
      double xh = (x.v[i * dim + j] - mean) * invstd;
      if (cache != nullptr) cache->x_hat.v[i * dim + j] = xh;
      y.v[i * dim + j] = gamma * xh + beta;
    }
  }
  return y;
}

Tensor SeGateForward(const SeParams& se, const Tensor& x, SeCache* cache) {
  SeCache local;
  SeCache* c = cache != nullptr ? cache : &local;
  c->x = x;
  LinearCache unused;
  Tensor hidden_pre = LinearForward(se.fc1, x, &unused);
  ReluCache relu_cache;
  c->hidden = ReluForward(hidden_pre, &relu_cache);
  c->hidden_positive = std::move(relu_cache.positive);
  Tensor gate_pre = LinearForward(se.fc2, c->hidden, &unused);
  c->gate = gate_pre;
  for (double& g : c->gate.v) g = Sigmoid(g);
  Tensor y = x;
  for (size_t i = 0; i < y.v.size(); ++i) y.v[i] *= c->gate.v[i];
  return y;
}

Tensor SeResBlockForward(SeResBlockParams* block, const Tensor& x, bool train,
                         double bn_eps, double bn_momentum,
                         SeResBlockCache* cache) {
  SeResBlockCache local;
  SeResBlockCache* c = cache != nullptr ? cache : &local;
  Tensor main = LinearForward(block->fc1, x, &c->fc1);
  main = BnForward(&block->bn1, main, train, bn_eps, bn_momentum, &c->bn1);
  main = ReluForward(main, &c->relu1);
  main = LinearForward(block->fc2, main, &c->fc2);
  main = BnForward(&block->bn2, main, train, bn_eps, bn_momentum, &c->bn2);
  main = SeGateForward(block->se, main, &c->se);
  Tensor shortcut;
  if (block->has_projection) {
    shortcut = LinearForward(block->proj, x, &c->proj);
    shortcut = BnForward(&block->proj_bn, shortcut, train, bn_eps,
                         bn_momentum, &c->proj_bn);
  } else {
    shortcut = x;
  }
  for (size_t i = 0; i < main.v.size(); ++i) main.v[i] += shortcut.v[i];
  return ReluForward(main, &c->out_relu);
}

Tensor DiffNetForward(DiffNetParams* params, const Tensor& x, bool train,
                      Rng* dropout_rng, DiffNetCache* cache) {
  const DiffNetConfig& cfg = params->config;
  cfg.Validate();
  if (x.Rank() != 2 || x.Cols() != cfg.input_dim) {
    throw ContractError("comparison head expects (batch x " +
                        std::to_string(cfg.input_dim) + ") input");
  }
  CheckFinite(x.v.data(), x.v.size(), "comparison head input");
  bool use_dropout = train && !cfg.IsSe() && cfg.dropout > 0.0;
  if (use_dropout && dropout_rng == nullptr) {
    throw ContractError("train-mode dropout needs a dropout stream");
  }
  DiffNetCache local;
  DiffNetCache* c = cache != nullptr ? cache : &local;
  *c = DiffNetCache();
  c->train = train;

  Tensor h = x;
  if (cfg.IsSe()) {
    c->blocks.resize(params->blocks.size());
    for (size_t i = 0; i < params->blocks.size(); ++i) {
      h = SeResBlockForward(&params->blocks[i], h, train, cfg.bn_eps,
                            cfg.bn_momentum, &c->blocks[i]);
    }
    h = BnForward(&params->head_bn, h, train, cfg.bn_eps, cfg.bn_momentum,
                  &c->head_bn);
    h = LinearForward(params->head_fc1, h, &c->head_fc1);
    h = ReluForward(h, &c->head_relu);
    h = LinearForward(params->head_fc2, h, &c->head_fc2);
  } else {
    size_t n = params->ffn_fc.size();
    c->fc.resize(n);
    c->bn.resize(n);
    c->relu.resize(n);
    c->dropout.resize(n);
    for (size_t i = 0; i < n; ++i) {
      h = LinearForward(params->ffn_fc[i], h, &c->fc[i]);
      h = BnForward(&params->ffn_bn[i], h, train, cfg.bn_eps,
                    cfg.bn_momentum, &c->bn[i]);
      h = ReluForward(h, &c->relu[i]);
      if (use_dropout) {
        h = DropoutForward(h, cfg.dropout, dropout_rng, &c->dropout[i]);
      }
    }
  }
  Tensor logits = LinearForward(params->out_fc, h, &c->out);
  Tensor probs = logits;
  for (double& p : probs.v) {
    p = std::min(1.0 - kProbMargin, std::max(kProbMargin, Sigmoid(p)));
  }
  c->probs = probs;
  return probs;
}

void DiffNetBackward(const DiffNetParams& params, const DiffNetCache& cache,
                     const Tensor& grad_logits, DiffNetParams* grads,
                     Tensor* grad_x) {
  const DiffNetConfig& cfg = params.config;
  if (grads == nullptr) {
    throw ContractError("comparison-head backward needs an accumulator");
  }
  if (grad_logits.Rank() != 2 || grad_logits.Cols() != cfg.output_dim) {
    throw ContractError("logit gradient shape mismatch");
  }
  size_t batch = grad_logits.Rows();
  size_t last = cfg.IsSe() ? cfg.head_hidden[1] : cfg.hidden.back();
  Tensor gh = Tensor::Zeros({batch, last});
  LinearBackward(params.out_fc, cache.out, grad_logits, &grads->out_fc, &gh);
  if (cfg.IsSe()) {
    Tensor g = Tensor::Zeros({batch, static_cast<size_t>(
                                          cfg.head_hidden[0])});
    LinearBackward(params.head_fc2, cache.head_fc2, gh, &grads->head_fc2,
                   &g);
    g = ReluBackward(cache.head_relu, g);
    Tensor g_bn = Tensor::Zeros({batch, static_cast<size_t>(
                                            cfg.hidden.back())});
    LinearBackward(params.head_fc1, cache.head_fc1, g, &grads->head_fc1,
                   &g_bn);
    Tensor gblock = BnBackward(params.head_bn, cache.head_bn, g_bn,
                               &grads->head_bn);
    for (size_t i = params.blocks.size(); i-- > 0;) {
      gblock = SeResBlockBackward(params.blocks[i], cache.blocks[i], gblock,
                                  &grads->blocks[i]);
    }
    if (grad_x != nullptr) *grad_x = gblock;
  } else {
    for (size_t i = params.ffn_fc.size(); i-- > 0;) {
      if (cache.dropout[i].active) {
        gh = DropoutBackward(cache.dropout[i], gh);
      }
      gh = ReluBackward(cache.relu[i], gh);
      gh = BnBackward(params.ffn_bn[i], cache.bn[i], gh, &grads->ffn_bn[i]);
      size_t prev = i == 0 ? cfg.input_dim : cfg.hidden[i - 1];
      Tensor gprev = Tensor::Zeros({batch, prev});
      LinearBackward(params.ffn_fc[i], cache.fc[i], gh, &grads->ffn_fc[i],
                     &gprev);
      gh = std::move(gprev);
    }
    if (grad_x != nullptr) *grad_x = gh;
  }
}

}  // namespace vtad
