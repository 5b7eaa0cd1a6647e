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

#ifndef VTF_MODEL_VERTIFORMER_H_
#define VTF_MODEL_VERTIFORMER_H_

#include "adcore/tensor.h"
#include "model/params.h"

namespace vtf::model {

inline constexpr double kNormEps = 1e-6;
inline constexpr double kMaskLogit = -1e9;

// Dropout plumbing threaded through every forward; rate 0 or training=false
// makes all dropouts identity.
struct DropoutCtx {
  bool training = false;
  double rate = 0.0;
  Rng* rng = nullptr;
};

ad::Tensor maybe_dropout(const ad::Tensor& x, const DropoutCtx& ctx);

// Positional encoding rows for positions [start, start+count).
// Sinusoidal rows are constants; learnable rows are slices of `table` and
// error if the range exceeds the table.
ad::Tensor positional_encoding_rows(PeKind kind, int start, int count,
                                    int d_model, const ad::Tensor& table);

// Additive mask [rows, cols]: 0 where column <= row, large-negative
// otherwise. The large-negative logits underflow to exactly zero attention
// weight, which is what makes causality bit-exact.
ad::Tensor causal_mask(int rows, int cols, ad::DType dtype);

// Multi-head scaled dot-product attention. q: [B, Sq, d], kv: [B, Skv, d];
// mask is empty (full attention) or [Sq, Skv] additive.
ad::Tensor multihead_attention(const ad::Tensor& q_in, const ad::Tensor& kv_in,
                               const AttentionParams& p, int heads,
                               const ad::Tensor& mask, const DropoutCtx& ctx);

ad::Tensor mlp_forward(const ad::Tensor& x, const MlpParams& p,
                       const DropoutCtx& ctx);

// Pre-norm block: x + attn(norm(x)), then x + mlp(norm(x)).
ad::Tensor encoder_block(const ad::Tensor& x, const EncLayerParams& p,
                         int heads, const ad::Tensor& mask,
                         const DropoutCtx& ctx);

// ---- VertiFormer pipeline ----

struct ForwardInputs {
  ad::Tensor hist_actions;  // [B, T, 2]
  ad::Tensor hist_deltas;   // [B, T, 6]
  ad::Tensor hist_patches;  // [B, T, P*P]
  ad::Tensor fut_actions;   // [B, tau, 2]; required for fkd/warmup
  ad::Tensor fut_deltas;    // [B, tau, 6]; required for ikd/warmup
};

struct ForwardOutputs {
  ad::Tensor pose_deltas;  // [B, tau, 6]
  ad::Tensor actions;      // [B, tau, 2], tanh-bounded
  ad::Tensor patches;      // [B, tau, P*P]; defined only with patch_head
};

// Per-modality affine embeddings (inputs in normalized units).
ad::Tensor embed_actions(const ad::Tensor& a, const VertiFormerParams& p);
ad::Tensor embed_poses(const ad::Tensor& d, const VertiFormerParams& p);
ad::Tensor embed_patches(const ad::Tensor& i, const VertiFormerParams& p);

// Concatenate (action, pose, patch — fixed order) and project to d_model.
ad::Tensor fuse_token(const ad::Tensor& a_hat, const ad::Tensor& p_hat,
                      const ad::Tensor& i_hat, const VertiFormerParams& p);

struct EncodeResult {
  ad::Tensor history_out;  // [B, T, d]
  ad::Tensor context_out;  // [B, K, d]
};

// Adds PE(0..T-1) to the fused history, appends the K context tokens (no
// PE), runs the bidirectional encoder stack, and splits the outputs.
EncodeResult encode_history(const ad::Tensor& hist_tokens,
                            const VertiFormerParams& p,
                            const DropoutCtx& ctx);

// tau future tokens for the mode: the masked modality slot holds its
// learnable mask vector, the patch slot always holds mask.patch, and
// positions continue the history (PE(T..T+tau-1)).
ad::Tensor build_future_tokens(Mode mode, const ad::Tensor& fut_actions,
                               const ad::Tensor& fut_deltas,
                               std::int64_t batch,
                               const VertiFormerParams& p);

// dec_layers of causal self-attention over the future tokens, causal
// cross-attention onto the context outputs (step t sees contexts 1..t), and
// MLP, all pre-norm with residuals.
ad::Tensor decode_future(const ad::Tensor& context_out,
                         const ad::Tensor& future_tokens,
                         const VertiFormerParams& p, const DropoutCtx& ctx);

ForwardOutputs heads_forward(const ad::Tensor& embeddings,
                             const VertiFormerParams& p);

// One non-autoregressive pass: all tau steps from a single graph evaluation.
ForwardOutputs vertiformer_forward(const ForwardInputs& in, Mode mode,
                                   const VertiFormerParams& p,
                                   const DropoutCtx& ctx);

}  // namespace vtf::model

#endif  // VTF_MODEL_VERTIFORMER_H_
