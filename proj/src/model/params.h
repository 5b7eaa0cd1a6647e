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

#ifndef VTF_MODEL_PARAMS_H_
#define VTF_MODEL_PARAMS_H_

#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "adcore/tensor.h"

namespace vtf::model {

enum class PeKind { sinusoidal, learnable };

struct ModelConfig {
  int d_model = 64;
  int enc_layers = 2;
  int dec_layers = 2;
  int heads = 4;
  int mlp_dim = 64;
  double dropout = 0.3;
  int history = 6;    // T past steps
  int horizon = 3;    // tau future steps per forward pass
  int n_context = 3;  // K context tokens; must be >= horizon
  PeKind pe_kind = PeKind::sinusoidal;
  bool final_norm = true;
  bool patch_head = false;
  int patch_cells = 16;  // patch side P; patch inputs are P*P
  ad::DType dtype = ad::DType::f64;

  int d_e() const { return d_model / 2; }  // per-modality embedding width
  int patch_dim() const { return patch_cells * patch_cells; }
  void validate() const;
};

// The full-size configuration from the reference architecture tables.
ModelConfig paper_model_config();

// Prediction task selected by which future modality is masked. warmup feeds
// both real modalities (no masking) for the first epochs of training.
enum class Mode { fkd, ikd, bc, warmup };

const char* mode_name(Mode m);

// Named registry of trainable tensors in insertion order. Tensors are shared
// handles; structured views alias the same storage the optimizer walks.
class ParamStore {
 public:
  ad::Tensor add(const std::string& name, ad::Tensor t);
  const ad::Tensor& get(const std::string& name) const;
  bool has(const std::string& name) const;
  const std::vector<std::pair<std::string, ad::Tensor>>& items() const {
    return items_;
  }
  std::int64_t param_count() const;
  void zero_grads();
  // Overwrites every tensor's values from a loaded checkpoint; names and
  // shapes must match exactly.
  void load_values(
      const std::vector<std::pair<std::string, ad::Tensor>>& loaded);

 private:
  std::vector<std::pair<std::string, ad::Tensor>> items_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct AttentionParams {
  ad::Tensor wq, bq, wk, bk, wv, bv, wo, bo;
};

struct MlpParams {
  ad::Tensor w1, b1, w2, b2;
};

struct EncLayerParams {
  ad::Tensor ln1_g;
  AttentionParams attn;
  ad::Tensor ln2_g;
  MlpParams mlp;
};

struct DecLayerParams {
  ad::Tensor ln1_g;
  AttentionParams self_attn;
  ad::Tensor ln2_g;
  AttentionParams cross_attn;
  ad::Tensor ln3_g;
  MlpParams mlp;
};

// Per-modality affine embeddings, the shared fusion map, learnable masks,
// context tokens, encoder/decoder stacks, and task heads.
struct VertiFormerParams {
  ModelConfig config;
  ParamStore store;

  ad::Tensor w_a, b_a;  // action   [2, d_e]
  ad::Tensor w_p, b_p;  // pose     [6, d_e]
  ad::Tensor w_i, b_i;  // patch    [P*P, d_e]
  ad::Tensor w_s, b_s;  // fusion   [3*d_e, d_model]
  ad::Tensor mask_a, mask_p, mask_i;  // learnable masks, each [d_e]
  ad::Tensor context;                 // [K, d_model]
  ad::Tensor pe_table;                // [T+tau, d_model], learnable PE only
  std::vector<EncLayerParams> enc;
  std::vector<DecLayerParams> dec;
  ad::Tensor final_gain;  // RMSNorm before the heads, if final_norm
  ad::Tensor head_pose_w, head_pose_b;    // [d_model, 6]
  ad::Tensor head_act_w, head_act_b;      // [d_model, 2]
  ad::Tensor head_patch_w, head_patch_b;  // [d_model, P*P], if patch_head

  static VertiFormerParams init(const ModelConfig& config,
                                std::uint64_t seed);
};

// Closed-form parameter count for reporting; must equal
// VertiFormerParams::init(config, seed).store.param_count().
std::int64_t vertiformer_param_count(const ModelConfig& config);

// Shared helpers for all model variants.
ad::Tensor init_weight(ParamStore& store, const std::string& name,
                       std::int64_t fan_in, std::int64_t fan_out, Rng& rng,
                       ad::DType dtype);
ad::Tensor init_bias(ParamStore& store, const std::string& name,
                     std::int64_t n, ad::DType dtype);
ad::Tensor init_gain(ParamStore& store, const std::string& name,
                     std::int64_t n, ad::DType dtype);
ad::Tensor init_vector(ParamStore& store, const std::string& name,
                       ad::Shape shape, Rng& rng, ad::DType dtype,
                       double stddev = 0.02);
AttentionParams init_attention(ParamStore& store, const std::string& prefix,
                               int d_model, Rng& rng, ad::DType dtype);
MlpParams init_mlp(ParamStore& store, const std::string& prefix, int d_model,
                   int mlp_dim, Rng& rng, ad::DType dtype);

}  // namespace vtf::model

#endif  // VTF_MODEL_PARAMS_H_
