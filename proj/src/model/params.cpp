// Copyright 2026 The vertiformer Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "model/params.h"

#include <cmath>
#include <stdexcept>

namespace vtf::model {

void ModelConfig::validate() const {
  if (d_model <= 0 || d_model % heads != 0) {
    throw std::invalid_argument("ModelConfig: d_model must divide by heads");
  }
  if (d_model % 2 != 0) {
    throw std::invalid_argument("ModelConfig: d_model must be even");
  }
  if (horizon < 1 || n_context < 1) {
    throw std::invalid_argument("ModelConfig: horizon and n_context >= 1");
  }
  if (n_context < horizon) {
    throw std::invalid_argument(
        "ModelConfig: n_context must be >= horizon for aligned causal "
        "cross-attention");
  }
  if (history < 1 || patch_cells < 1 || mlp_dim < 1) {
    throw std::invalid_argument("ModelConfig: sizes must be positive");
  }
}

ModelConfig paper_model_config() {
  ModelConfig c;
  c.d_model = 512;
  c.enc_layers = 6;
  c.dec_layers = 4;
  c.heads = 8;
  c.mlp_dim = 512;
  c.dropout = 0.3;
  c.history = 6;
  c.horizon = 3;
  c.n_context = 3;
  return c;
}

const char* mode_name(Mode m) {
  switch (m) {
    case Mode::fkd: return "fkd";
    case Mode::ikd: return "ikd";
    case Mode::bc: return "bc";
    case Mode::warmup: return "warmup";
  }
  return "?";
}

ad::Tensor ParamStore::add(const std::string& name, ad::Tensor t) {
  if (index_.count(name)) {
    throw std::invalid_argument("ParamStore: duplicate name " + name);
  }
  t.set_requires_grad(true);
  index_[name] = items_.size();
  items_.emplace_back(name, t);
  return t;
}

const ad::Tensor& ParamStore::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) {
    throw std::invalid_argument("ParamStore: unknown name " + name);
  }
  return items_[it->second].second;
}

bool ParamStore::has(const std::string& name) const {
  return index_.count(name) > 0;
}

std::int64_t ParamStore::param_count() const {
  std::int64_t n = 0;
  for (const auto& [name, t] : items_) n += t.numel();
  return n;
}

void ParamStore::zero_grads() {
  for (auto& [name, t] : items_) {
    ad::Tensor handle = t;
    handle.zero_grad();
  }
}

void ParamStore::load_values(
    const std::vector<std::pair<std::string, ad::Tensor>>& loaded) {
  if (loaded.size() != items_.size()) {
    throw std::runtime_error("checkpoint holds " +
                             std::to_string(loaded.size()) + " tensors, model "
                             "expects " + std::to_string(items_.size()));
  }
  for (const auto& [name, src] : loaded) {
    auto it = index_.find(name);
    if (it == index_.end()) {
      throw std::runtime_error("checkpoint tensor " + name +
                               " has no matching parameter");
    }
    ad::Tensor dst = items_[it->second].second;
    if (src.shape() != dst.shape()) {
      throw std::runtime_error("checkpoint tensor " + name + " shape " +
                               ad::shape_str(src.shape()) +
                               " != parameter shape " +
                               ad::shape_str(dst.shape()));
    }
    auto out = dst.mutable_data();
    auto in = src.data();
    for (std::int64_t i = 0; i < dst.numel(); ++i) out[i] = in[i];
  }
}

ad::Tensor init_weight(ParamStore& store, const std::string& name,
                       std::int64_t fan_in, std::int64_t fan_out, Rng& rng,
                       ad::DType dtype) {
  const double stddev = 1.0 / std::sqrt(static_cast<double>(fan_in));
  return store.add(name,
                   ad::Tensor::randn({fan_in, fan_out}, rng, stddev, dtype));
}

ad::Tensor init_bias(ParamStore& store, const std::string& name,
                     std::int64_t n, ad::DType dtype) {
  return store.add(name, ad::Tensor::zeros({n}, dtype));
}

ad::Tensor init_gain(ParamStore& store, const std::string& name,
                     std::int64_t n, ad::DType dtype) {
  return store.add(name, ad::Tensor::full({n}, 1.0, dtype));
}

ad::Tensor init_vector(ParamStore& store, const std::string& name,
                       ad::Shape shape, Rng& rng, ad::DType dtype,
                       double stddev) {
  return store.add(name, ad::Tensor::randn(std::move(shape), rng, stddev,
                                           dtype));
}

AttentionParams init_attention(ParamStore& store, const std::string& prefix,
                               int d_model, Rng& rng, ad::DType dtype) {
  AttentionParams a;
  a.wq = init_weight(store, prefix + ".wq", d_model, d_model, rng, dtype);
  a.bq = init_bias(store, prefix + ".bq", d_model, dtype);
  a.wk = init_weight(store, prefix + ".wk", d_model, d_model, rng, dtype);
  a.bk = init_bias(store, prefix + ".bk", d_model, dtype);
  a.wv = init_weight(store, prefix + ".wv", d_model, d_model, rng, dtype);
  a.bv = init_bias(store, prefix + ".bv", d_model, dtype);
  a.wo = init_weight(store, prefix + ".wo", d_model, d_model, rng, dtype);
  a.bo = init_bias(store, prefix + ".bo", d_model, dtype);
  return a;
}

MlpParams init_mlp(ParamStore& store, const std::string& prefix, int d_model,
                   int mlp_dim, Rng& rng, ad::DType dtype) {
  MlpParams m;
  m.w1 = init_weight(store, prefix + ".w1", d_model, mlp_dim, rng, dtype);
  m.b1 = init_bias(store, prefix + ".b1", mlp_dim, dtype);
  m.w2 = init_weight(store, prefix + ".w2", mlp_dim, d_model, rng, dtype);
  m.b2 = init_bias(store, prefix + ".b2", d_model, dtype);
  return m;
}

VertiFormerParams VertiFormerParams::init(const ModelConfig& config,
                                          std::uint64_t seed) {
  config.validate();
  VertiFormerParams p;
  p.config = config;
  Rng rng(seed);
  const ad::DType dt = config.dtype;
  const int de = config.d_e();
  const int d = config.d_model;

  p.w_a = init_weight(p.store, "embed.action.w", 2, de, rng, dt);
  p.b_a = init_bias(p.store, "embed.action.b", de, dt);
  p.w_p = init_weight(p.store, "embed.pose.w", 6, de, rng, dt);
  p.b_p = init_bias(p.store, "embed.pose.b", de, dt);
  p.w_i = init_weight(p.store, "embed.patch.w", config.patch_dim(), de, rng,
                      dt);
  p.b_i = init_bias(p.store, "embed.patch.b", de, dt);
  p.w_s = init_weight(p.store, "fuse.w", 3 * de, d, rng, dt);
  p.b_s = init_bias(p.store, "fuse.b", d, dt);
  p.mask_a = init_vector(p.store, "mask.action", {de}, rng, dt);
  p.mask_p = init_vector(p.store, "mask.pose", {de}, rng, dt);
  p.mask_i = init_vector(p.store, "mask.patch", {de}, rng, dt);
  p.context = init_vector(p.store, "context", {config.n_context, d}, rng, dt);
  if (config.pe_kind == PeKind::learnable) {
    p.pe_table = init_vector(p.store, "pe",
                             {config.history + config.horizon, d}, rng, dt);
  }
  for (int l = 0; l < config.enc_layers; ++l) {
    const std::string pre = "enc." + std::to_string(l);
    EncLayerParams layer;
    layer.ln1_g = init_gain(p.store, pre + ".ln1", d, dt);
    layer.attn = init_attention(p.store, pre + ".attn", d, rng, dt);
    layer.ln2_g = init_gain(p.store, pre + ".ln2", d, dt);
    layer.mlp = init_mlp(p.store, pre + ".mlp", d, config.mlp_dim, rng, dt);
    p.enc.push_back(std::move(layer));
  }
  for (int l = 0; l < config.dec_layers; ++l) {
    const std::string pre = "dec." + std::to_string(l);
    DecLayerParams layer;
    layer.ln1_g = init_gain(p.store, pre + ".ln1", d, dt);
    layer.self_attn = init_attention(p.store, pre + ".self", d, rng, dt);
    layer.ln2_g = init_gain(p.store, pre + ".ln2", d, dt);
    layer.cross_attn = init_attention(p.store, pre + ".cross", d, rng, dt);
    layer.ln3_g = init_gain(p.store, pre + ".ln3", d, dt);
    layer.mlp = init_mlp(p.store, pre + ".mlp", d, config.mlp_dim, rng, dt);
    p.dec.push_back(std::move(layer));
  }
  if (config.final_norm) {
    p.final_gain = init_gain(p.store, "final_norm", d, dt);
  }
  p.head_pose_w = init_weight(p.store, "head.pose.w", d, 6, rng, dt);
  p.head_pose_b = init_bias(p.store, "head.pose.b", 6, dt);
  p.head_act_w = init_weight(p.store, "head.action.w", d, 2, rng, dt);
  p.head_act_b = init_bias(p.store, "head.action.b", 2, dt);
  if (config.patch_head) {
    p.head_patch_w = init_weight(p.store, "head.patch.w", d,
                                 config.patch_dim(), rng, dt);
    p.head_patch_b = init_bias(p.store, "head.patch.b", config.patch_dim(),
                               dt);
  }
  return p;
}

std::int64_t vertiformer_param_count(const ModelConfig& config) {
  const std::int64_t d = config.d_model;
  const std::int64_t de = config.d_e();
  const std::int64_t m = config.mlp_dim;
  const std::int64_t pp = config.patch_dim();
  const std::int64_t attn = 4 * (d * d + d);
  const std::int64_t mlp = d * m + m + m * d + d;
  std::int64_t n = 0;
  n += (2 + 1) * de + (6 + 1) * de + (pp + 1) * de;  // modality embeddings
  n += 3 * de * d + d;                               // fusion
  n += 3 * de;                                       // learnable masks
  n += config.n_context * d;                         // context tokens
  if (config.pe_kind == PeKind::learnable) {
    n += (config.history + config.horizon) * d;
  }
  n += config.enc_layers * (attn + mlp + 2 * d);
  n += config.dec_layers * (2 * attn + mlp + 3 * d);
  if (config.final_norm) n += d;
  n += (d + 1) * 6 + (d + 1) * 2;
  if (config.patch_head) n += (d + 1) * pp;
  return n;
}

}  // namespace vtf::model
