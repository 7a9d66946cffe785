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

#include "vtad/astp.h"

#include <algorithm>
#include <cmath>

#include "vtad/common.h"
#include "vtad/rng.h"

namespace vtad {

uint32_t AstpConfig::SliceDim() const {
  if (heads == 0 || dim == 0 || dim % heads != 0) {
    throw ConfigError("pooling heads must divide the channel dimension (" +
                      std::to_string(heads) + " does not divide " +
                      std::to_string(dim) + ")");
  }
  return dim / heads;
}

void AstpConfig::Validate() const {
  SliceDim();
  if (AttnDim() == 0) throw ConfigError("pooling scorer width must be >= 1");
  if (eps <= 0.0) throw ConfigError("pooling variance floor must be > 0");
  if (dropout < 0.0 || dropout >= 1.0) {
    throw ConfigError("pooling dropout rate must be in [0, 1)");
  }
}

AstpParams AstpParams::Zeros(const AstpConfig& config) {
  config.Validate();
  AstpParams p;
  p.config = config;
  size_t s = config.SliceDim();
  size_t a = config.AttnDim();
  for (uint32_t h = 0; h < config.heads; ++h) {
    p.w.push_back(Tensor::Zeros({a, s}));
    p.b.push_back(Tensor::Zeros({a}));
    p.v.push_back(Tensor::Zeros({a}));
    p.k.push_back(Tensor::Zeros({1}));
  }
  return p;
}

AstpParams AstpParams::Init(const AstpConfig& config, uint64_t seed) {
  AstpParams p = Zeros(config);
  Rng rng(seed);
  double s = static_cast<double>(config.SliceDim());
  double a = static_cast<double>(config.AttnDim());
  for (uint32_t h = 0; h < config.heads; ++h) {
    p.w[h].FillUniform(&rng, 1.0 / std::sqrt(s));
    p.v[h].FillUniform(&rng, 1.0 / std::sqrt(a));
  }
  return p;
}

std::vector<ParamRef> AstpParams::Params(const std::string& prefix) {
  std::vector<ParamRef> refs;
  for (size_t h = 0; h < w.size(); ++h) {
    std::string head = prefix + ".h" + std::to_string(h);
    refs.push_back({head + ".w", &w[h]});
    refs.push_back({head + ".b", &b[h]});
    refs.push_back({head + ".v", &v[h]});
    refs.push_back({head + ".k", &k[h]});
  }
  return refs;
}

std::vector<double> AstpForward(const AstpParams& params, const Tensor& x,
                                bool train, Rng* dropout_rng,
                                AstpCache* cache) {
  const AstpConfig& cfg = params.config;
  cfg.Validate();
  if (x.Rank() != 2 || x.Cols() != cfg.dim) {
    throw ContractError("pooling input must be (layers x " +
                        std::to_string(cfg.dim) + ")");
  }
  size_t num_layers = x.Rows();
  if (num_layers == 0) {
    throw ContractError("pooling input needs at least one layer");
  }
  CheckFinite(x.v.data(), x.v.size(), "pooling input");
  size_t slice = cfg.SliceDim();
  size_t attn = cfg.AttnDim();
  double rate = cfg.dropout;
  bool use_dropout = train && rate > 0.0;
  if (use_dropout && dropout_rng == nullptr) {
    throw ContractError("train-mode pooling needs a dropout stream");
  }
  double keep_scale = use_dropout ? 1.0 / (1.0 - rate) : 1.0;

  if (cache != nullptr) {
    *cache = AstpCache();
    cache->train = use_dropout;
    cache->x = x;
    cache->tanh_out.resize(cfg.heads);
    cache->hidden_keep.resize(cfg.heads);
    cache->hidden.resize(cfg.heads);
    cache->alpha.resize(cfg.heads);
    cache->mu.resize(cfg.heads);
    cache->raw_sq.resize(cfg.heads);
    cache->var.resize(cfg.heads);
    cache->sigma.resize(cfg.heads);
  }

  std::vector<double> pooled(2 * cfg.dim, 0.0);
  for (uint32_t h = 0; h < cfg.heads; ++h) {
    const Tensor& w = params.w[h];
    const Tensor& b = params.b[h];
    const Tensor& v = params.v[h];
    double k = params.k[h].v[0];
    size_t offset = static_cast<size_t>(h) * slice;

    std::vector<double> tanh_out(num_layers * attn);
    std::vector<uint8_t> keep(use_dropout ? num_layers * attn : 0, 1);
    std::vector<double> hidden(num_layers * attn);
    std::vector<double> scores(num_layers);
    for (size_t l = 0; l < num_layers; ++l) {
      const double* xl = x.v.data() + l * cfg.dim + offset;
      double score = k;
      for (size_t a = 0; a < attn; ++a) {
        double z = b.v[a];
        const double* wrow = w.v.data() + a * slice;
        for (size_t c = 0; c < slice; ++c) z += wrow[c] * xl[c];
        double t = std::tanh(z);
        tanh_out[l * attn + a] = t;
        double hval = t;
        if (use_dropout) {
          uint8_t kept = dropout_rng->U01() >= rate ? 1 : 0;
          keep[l * attn + a] = kept;
          hval = kept ? t * keep_scale : 0.0;
        }
        hidden[l * attn + a] = hval;
        score += v.v[a] * hval;
      }
      scores[l] = score;
    }

    // Softmax over layers with max subtraction.
    double max_score = scores[0];
    for (double s : scores) max_score = std::max(max_score, s);
    std::vector<double> alpha(num_layers);
    double denom = 0.0;
    for (size_t l = 0; l < num_layers; ++l) {
      alpha[l] = std::exp(scores[l] - max_score);
      denom += alpha[l];
    }
    for (double& a : alpha) a /= denom;

    std::vector<double> mu(slice, 0.0);
    std::vector<double> raw_sq(slice, 0.0);
    for (size_t l = 0; l < num_layers; ++l) {
      const double* xl = x.v.data() + l * cfg.dim + offset;
      for (size_t c = 0; c < slice; ++c) {
        mu[c] += alpha[l] * xl[c];
        raw_sq[c] += alpha[l] * xl[c] * xl[c];
      }
    }
    std::vector<double> var(slice);
    std::vector<double> sigma(slice);
    for (size_t c = 0; c < slice; ++c) {
      var[c] = raw_sq[c] - mu[c] * mu[c];
      sigma[c] = std::sqrt(std::max(var[c], cfg.eps));
      pooled[offset + c] = mu[c];
      pooled[cfg.dim + offset + c] = sigma[c];
    }

    if (cache != nullptr) {
      cache->tanh_out[h] = std::move(tanh_out);
      cache->hidden_keep[h] = std::move(keep);
      cache->hidden[h] = std::move(hidden);
      cache->alpha[h] = std::move(alpha);
      cache->mu[h] = std::move(mu);
      cache->raw_sq[h] = std::move(raw_sq);
      cache->var[h] = std::move(var);
      cache->sigma[h] = std::move(sigma);
    }
  }

  std::vector<double> out = pooled;
  std::vector<uint8_t> out_keep;
  if (use_dropout) {
    out_keep.resize(pooled.size());
    for (size_t i = 0; i < pooled.size(); ++i) {
      out_keep[i] = dropout_rng->U01() >= rate ? 1 : 0;
      out[i] = out_keep[i] ? pooled[i] * keep_scale : 0.0;
    }
  }
  if (cache != nullptr) {
    cache->pooled = std::move(pooled);
    cache->out_keep = std::move(out_keep);
  }
  return out;
}

void AstpBackward(const AstpParams& params, const AstpCache& cache,
                  const std::vector<double>& grad_out, AstpParams* grads,
                  Tensor* grad_x) {
  const AstpConfig& cfg = params.config;
  size_t slice = cfg.SliceDim();
  size_t attn = cfg.AttnDim();
  size_t num_layers = cache.x.Rows();
  if (grads == nullptr) {
    throw ContractError("pooling backward needs a gradient accumulator");
  }
  if (grad_out.size() != 2 * cfg.dim) {
    throw ContractError("pooling output gradient has the wrong length");
  }
  double keep_scale = cache.train ? 1.0 / (1.0 - cfg.dropout) : 1.0;

  std::vector<double> g_pooled(grad_out);
  if (cache.train) {
    for (size_t i = 0; i < g_pooled.size(); ++i) {
      g_pooled[i] = cache.out_keep[i] ? g_pooled[i] * keep_scale : 0.0;
    }
  }
  if (grad_x != nullptr) {
    *grad_x = Tensor::Zeros(cache.x.shape);
  }

  for (uint32_t h = 0; h < cfg.heads; ++h) {
    const Tensor& w = params.w[h];
    const Tensor& v = params.v[h];
    const std::vector<double>& alpha = cache.alpha[h];
    const std::vector<double>& mu = cache.mu[h];
    const std::vector<double>& var = cache.var[h];
    const std::vector<double>& sigma = cache.sigma[h];
    size_t offset = static_cast<size_t>(h) * slice;

    // Split the pooled gradient into mean/std parts, then push the std part
    // back through sqrt and the variance floor.
    std::vector<double> g_mu(slice);
    std::vector<double> g_raw(slice);
    for (size_t c = 0; c < slice; ++c) {
      double gm = g_pooled[offset + c];
      double gs = g_pooled[cfg.dim + offset + c];
      double g_var = var[c] > cfg.eps ? gs / (2.0 * sigma[c]) : 0.0;
      g_raw[c] = g_var;
      g_mu[c] = gm - 2.0 * mu[c] * g_var;
    }

    // Gradient w.r.t. the attention weights, then through the softmax.
    std::vector<double> g_alpha(num_layers, 0.0);
    for (size_t l = 0; l < num_layers; ++l) {
      const double* xl = cache.x.v.data() + l * cfg.dim + offset;
      double acc = 0.0;
      for (size_t c = 0; c < slice; ++c) {
        acc += g_mu[c] * xl[c] + g_raw[c] * xl[c] * xl[c];
      }
      g_alpha[l] = acc;
    }
    double weighted = 0.0;
    for (size_t l = 0; l < num_layers; ++l) weighted += alpha[l] * g_alpha[l];
    std::vector<double> g_score(num_layers);
    for (size_t l = 0; l < num_layers; ++l) {
      g_score[l] = alpha[l] * (g_alpha[l] - weighted);
    }

    // Through the scorer into parameters and the input slice.
    for (size_t l = 0; l < num_layers; ++l) {
      const double* xl = cache.x.v.data() + l * cfg.dim + offset;
      double gs = g_score[l];
      grads->k[h].v[0] += gs;
      double* gx = nullptr;
      if (grad_x != nullptr) {
        gx = grad_x->v.data() + l * cfg.dim + offset;
        for (size_t c = 0; c < slice; ++c) {
          gx[c] += alpha[l] * (g_mu[c] + 2.0 * g_raw[c] * xl[c]);
        }
      }
      for (size_t a = 0; a < attn; ++a) {
        double hval = cache.hidden[h][l * attn + a];
        grads->v[h].v[a] += gs * hval;
        double g_h = gs * v.v[a];
        if (cache.train) {
          g_h = cache.hidden_keep[h][l * attn + a] ? g_h * keep_scale : 0.0;
        }
        double t = cache.tanh_out[h][l * attn + a];
        double g_z = g_h * (1.0 - t * t);
        grads->b[h].v[a] += g_z;
        double* gw = grads->w[h].v.data() + a * slice;
        const double* wrow = w.v.data() + a * slice;
        for (size_t c = 0; c < slice; ++c) {
          gw[c] += g_z * xl[c];
          if (gx != nullptr) gx[c] += g_z * wrow[c];
        }
      }
    }
  }
}

Tensor StackToTensor(const LayerStack& stack) {
  ValidateLayerStack(stack);
  Tensor t = Tensor::Zeros({stack.num_layers, stack.dim});
  for (size_t i = 0; i < stack.values.size(); ++i) {
    t.v[i] = static_cast<double>(stack.values[i]);
  }
  return t;
}

}  // namespace vtad
