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

#ifndef VTF_MODEL_BASELINES_H_
#define VTF_MODEL_BASELINES_H_

#include "adcore/tensor.h"
#include "model/params.h"
#include "model/vertiformer.h"

namespace vtf::model {

// ---- Encoder-only baseline (masked-token reconstruction) ----

struct EncoderOnlyParams {
  ModelConfig config;
  ParamStore store;
  ad::Tensor w_a, b_a, w_p, b_p, w_i, b_i, w_s, b_s;
  ad::Tensor mask_token;  // [d_model], shared replacement for masked tokens
  std::vector<EncLayerParams> enc;
  ad::Tensor recon_w, recon_b;  // [d, d]: reconstruct fused tokens
  ad::Tensor fkd_w, fkd_b;      // pooled -> tau*6
  ad::Tensor ikd_w, ikd_b;      // pooled -> tau*2
  ad::Tensor bc_w, bc_b;        // pooled -> tau*2

  static EncoderOnlyParams init(const ModelConfig& config,
                                std::uint64_t seed);
};

struct EncoderOnlyOutputs {
  ad::Tensor recon;         // [B, T, d] reconstructions
  ad::Tensor recon_target;  // [B, T, d] detached fused tokens
  ad::Tensor mask_flags;    // [B, T, d] constant 1 where the token was masked
  ad::Tensor pooled;        // [B, d] mean over token outputs
  ad::Tensor fkd_deltas;    // [B, tau, 6]
  ad::Tensor ikd_actions;   // [B, tau, 2], tanh-bounded
  ad::Tensor bc_actions;    // [B, tau, 2], tanh-bounded
};

// Each fused history token is independently replaced by the learnable mask
// token with probability mask_ratio (drawn from mask_rng); the encoder
// reconstructs the original fused tokens and per-task heads read the pooled
// output.
EncoderOnlyOutputs encoder_only_forward(const ad::Tensor& hist_actions,
                                        const ad::Tensor& hist_deltas,
                                        const ad::Tensor& hist_patches,
                                        const EncoderOnlyParams& p,
                                        double mask_ratio, Rng& mask_rng,
                                        const DropoutCtx& ctx);

std::int64_t encoder_only_param_count(const ModelConfig& config);

// ---- Decoder-only baseline (next-token prediction) ----

struct DecoderOnlyParams {
  ModelConfig config;
  ParamStore store;
  ad::Tensor w_a, b_a, w_p, b_p, w_i, b_i, w_s, b_s;
  std::vector<EncLayerParams> layers;  // run with a causal mask
  ad::Tensor head_pose_w, head_pose_b;
  ad::Tensor head_act_w, head_act_b;

  static DecoderOnlyParams init(const ModelConfig& config,
                                std::uint64_t seed);
};

struct DecoderOnlyOutputs {
  ad::Tensor pose_deltas;  // [B, L, 6]: position t predicts step t+1
  ad::Tensor actions;      // [B, L, 2], tanh-bounded
};

// Causal self-attention over L fused tokens; the output at position t is the
// prediction for step t+1. Requesting bc is unsupported for this baseline.
DecoderOnlyOutputs decoder_only_forward(const ad::Tensor& actions,
                                        const ad::Tensor& deltas,
                                        const ad::Tensor& patches,
                                        const DecoderOnlyParams& p,
                                        const DropoutCtx& ctx);

std::int64_t decoder_only_param_count(const ModelConfig& config);

// ---- End-to-end baseline (conv patch encoder + MLP) ----

struct End2EndParams {
  ModelConfig config;
  ParamStore store;
  ad::Tensor conv1_w, conv1_b;  // [8, 1, 3, 3]
  ad::Tensor conv2_w, conv2_b;  // [16, 8, 3, 3]
  ad::Tensor conv3_w, conv3_b;  // [32, 16, 3, 3]
  ad::Tensor fc1_w, fc1_b;      // flattened features -> 256
  ad::Tensor fc2_w, fc2_b;      // 256 -> 512
  ad::Tensor fc3_w, fc3_b;      // 512 -> 64
  ad::Tensor out_w, out_b;      // 64 -> 6*tau

  static End2EndParams init(const ModelConfig& config, std::uint64_t seed);
  static std::int64_t feature_dim(const ModelConfig& config);
};

inline constexpr double kEnd2EndDropout = 0.2;

// Three stride-2 conv stages (widths 8/16/32) with global average pooling
// per history patch, concatenated with flattened history actions/deltas and
// the tau future actions, through a tanh MLP to tau pose deltas.
ad::Tensor end2end_forward(const ad::Tensor& hist_actions,
                           const ad::Tensor& hist_deltas,
                           const ad::Tensor& hist_patches,
                           const ad::Tensor& fut_actions,
                           const End2EndParams& p, const DropoutCtx& ctx);

std::int64_t end2end_param_count(const ModelConfig& config);

}  // namespace vtf::model

#endif  // VTF_MODEL_BASELINES_H_
