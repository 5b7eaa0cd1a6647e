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

#include "model/vertiformer.h"

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace vtf::model {

namespace {

using ad::Tensor;

Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b) {
  return ad::add(ad::matmul(x, w), b);
}

void check_trailing(const Tensor& t, std::int64_t want, const char* what) {
  if (!t.defined() || t.ndim() < 2 || t.dim(-1) != want) {
    throw std::invalid_argument(std::string(what) + ": expected [..., " +
                                std::to_string(want) + "], got " +
                                (t.defined() ? ad::shape_str(t.shape())
                                             : std::string("undefined")));
  }
}

}  // namespace

ad::Tensor maybe_dropout(const Tensor& x, const DropoutCtx& ctx) {
  if (!ctx.training || ctx.rate <= 0.0) return x;
  if (!ctx.rng) {
    throw std::invalid_argument("dropout in training mode needs an rng");
  }
  return ad::dropout(x, ctx.rate, true, *ctx.rng);
}

ad::Tensor positional_encoding_rows(PeKind kind, int start, int count,
                                    int d_model, const Tensor& table) {
  if (start < 0 || count < 0) {
    throw std::invalid_argument("positional encoding: negative position");
  }
  if (kind == PeKind::learnable) {
    if (!table.defined()) {
      throw std::invalid_argument("learnable positional encoding: no table");
    }
    if (start + count > table.dim(0)) {
      throw std::out_of_range(
          "positional encoding: position " + std::to_string(start + count - 1) +
          " >= table size " + std::to_string(table.dim(0)));
    }
    return ad::slice(table, 0, start, count);
  }
  std::vector<double> rows(static_cast<std::size_t>(count) * d_model);
  for (int p = 0; p < count; ++p) {
    const double pos = start + p;
    for (int k = 0; 2 * k < d_model; ++k) {
      const double freq =
          std::pow(10000.0, -2.0 * k / static_cast<double>(d_model));
      rows[p * d_model + 2 * k] = std::sin(pos * freq);
      if (2 * k + 1 < d_model) {
        rows[p * d_model + 2 * k + 1] = std::cos(pos * freq);
      }
    }
  }
  return Tensor::from_data({count, d_model}, std::move(rows));
}

ad::Tensor causal_mask(int rows, int cols, ad::DType dtype) {
  std::vector<double> m(static_cast<std::size_t>(rows) * cols, 0.0);
  for (int i = 0; i < rows; ++i) {
    for (int j = i + 1; j < cols; ++j) m[i * cols + j] = kMaskLogit;
  }
  return Tensor::from_data({rows, cols}, std::move(m), dtype);
}

ad::Tensor multihead_attention(const Tensor& q_in, const Tensor& kv_in,
                               const AttentionParams& p, int heads,
                               const Tensor& mask, const DropoutCtx& ctx) {
  const std::int64_t d = q_in.dim(-1);
  if (d % heads != 0) {
    throw std::invalid_argument("attention: d_model not divisible by heads");
  }
  const std::int64_t dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  const Tensor q = affine(q_in, p.wq, p.bq);
  const Tensor k = affine(kv_in, p.wk, p.bk);
  const Tensor v = affine(kv_in, p.wv, p.bv);
  std::vector<Tensor> head_outs;
  head_outs.reserve(heads);
  for (int h = 0; h < heads; ++h) {
    const Tensor qh = ad::slice(q, -1, h * dh, dh);
    const Tensor kh = ad::slice(k, -1, h * dh, dh);
    const Tensor vh = ad::slice(v, -1, h * dh, dh);
    Tensor scores =
        ad::scalar_mul(ad::matmul(qh, ad::transpose_last(kh)), scale);
    if (mask.defined()) scores = ad::add(scores, mask);
    Tensor weights = ad::softmax(scores, -1);
    weights = maybe_dropout(weights, ctx);
    head_outs.push_back(ad::matmul(weights, vh));
  }
  return affine(ad::concat(head_outs, -1), p.wo, p.bo);
}

ad::Tensor mlp_forward(const Tensor& x, const MlpParams& p,
                       const DropoutCtx& ctx) {
  const Tensor h = ad::gelu(affine(x, p.w1, p.b1));
  return maybe_dropout(affine(h, p.w2, p.b2), ctx);
}

ad::Tensor encoder_block(const Tensor& x, const EncLayerParams& p, int heads,
                         const Tensor& mask, const DropoutCtx& ctx) {
  const Tensor n1 = ad::rmsnorm(x, p.ln1_g, kNormEps);
  const Tensor after_attn =
      ad::add(x, multihead_attention(n1, n1, p.attn, heads, mask, ctx));
  const Tensor n2 = ad::rmsnorm(after_attn, p.ln2_g, kNormEps);
  return ad::add(after_attn, mlp_forward(n2, p.mlp, ctx));
}

ad::Tensor embed_actions(const Tensor& a, const VertiFormerParams& p) {
  check_trailing(a, 2, "embed_actions");
  return affine(a, p.w_a, p.b_a);
}

ad::Tensor embed_poses(const Tensor& d, const VertiFormerParams& p) {
  check_trailing(d, 6, "embed_poses");
  return affine(d, p.w_p, p.b_p);
}

ad::Tensor embed_patches(const Tensor& i, const VertiFormerParams& p) {
  check_trailing(i, p.config.patch_dim(), "embed_patches");
  return affine(i, p.w_i, p.b_i);
}

ad::Tensor fuse_token(const Tensor& a_hat, const Tensor& p_hat,
                      const Tensor& i_hat, const VertiFormerParams& p) {
  const std::int64_t de = p.config.d_e();
  if (a_hat.dim(-1) != de || p_hat.dim(-1) != de || i_hat.dim(-1) != de) {
    throw std::invalid_argument("fuse_token: embeddings must all be length " +
                                std::to_string(de));
  }
  return affine(ad::concat({a_hat, p_hat, i_hat}, -1), p.w_s, p.b_s);
}

EncodeResult encode_history(const Tensor& hist_tokens,
                            const VertiFormerParams& p,
                            const DropoutCtx& ctx) {
  const ModelConfig& c = p.config;
  if (hist_tokens.ndim() != 3 || hist_tokens.dim(1) != c.history ||
      hist_tokens.dim(-1) != c.d_model) {
    throw std::invalid_argument("encode: expected [B, " +
                                std::to_string(c.history) + ", " +
                                std::to_string(c.d_model) + "] history, got " +
                                ad::shape_str(hist_tokens.shape()));
  }
  const std::int64_t batch = hist_tokens.dim(0);
  const Tensor pe = positional_encoding_rows(c.pe_kind, 0, c.history,
                                             c.d_model, p.pe_table);
  const Tensor with_pe = ad::add(hist_tokens, pe);
  const Tensor ctx_tokens =
      ad::broadcast_to(p.context, {batch, c.n_context, c.d_model});
  Tensor x = ad::concat({with_pe, ctx_tokens}, 1);
  const Tensor no_mask;
  for (const EncLayerParams& layer : p.enc) {
    x = encoder_block(x, layer, c.heads, no_mask, ctx);
  }
  EncodeResult out;
  out.history_out = ad::slice(x, 1, 0, c.history);
  out.context_out = ad::slice(x, 1, c.history, c.n_context);
  return out;
}

ad::Tensor build_future_tokens(Mode mode, const Tensor& fut_actions,
                               const Tensor& fut_deltas, std::int64_t batch,
                               const VertiFormerParams& p) {
  const ModelConfig& c = p.config;
  const std::int64_t tau = c.horizon;
  const ad::Shape slot_shape{batch, tau, c.d_e()};
  const bool need_actions = mode == Mode::fkd || mode == Mode::warmup;
  const bool need_deltas = mode == Mode::ikd || mode == Mode::warmup;
  if (need_actions &&
      (!fut_actions.defined() || fut_actions.ndim() != 3 ||
       fut_actions.dim(0) != batch || fut_actions.dim(1) != tau)) {
    throw std::invalid_argument(std::string("build_future_tokens: ") +
                                mode_name(mode) + " requires future actions [" +
                                std::to_string(batch) + ", " +
                                std::to_string(tau) + ", 2]");
  }
  if (need_deltas &&
      (!fut_deltas.defined() || fut_deltas.ndim() != 3 ||
       fut_deltas.dim(0) != batch || fut_deltas.dim(1) != tau)) {
    throw std::invalid_argument(std::string("build_future_tokens: ") +
                                mode_name(mode) +
                                " requires future pose deltas [" +
                                std::to_string(batch) + ", " +
                                std::to_string(tau) + ", 6]");
  }
  const Tensor a_hat = need_actions ? embed_actions(fut_actions, p)
                                    : ad::broadcast_to(p.mask_a, slot_shape);
  const Tensor p_hat = need_deltas ? embed_poses(fut_deltas, p)
                                   : ad::broadcast_to(p.mask_p, slot_shape);
  const Tensor i_hat = ad::broadcast_to(p.mask_i, slot_shape);
  const Tensor fused = fuse_token(a_hat, p_hat, i_hat, p);
  const Tensor pe = positional_encoding_rows(
      c.pe_kind, c.history, static_cast<int>(tau), c.d_model, p.pe_table);
  return ad::add(fused, pe);
}

ad::Tensor decode_future(const Tensor& context_out, const Tensor& future_tokens,
                         const VertiFormerParams& p, const DropoutCtx& ctx) {
  const ModelConfig& c = p.config;
  if (c.n_context < c.horizon) {
    throw std::invalid_argument("decode: n_context < horizon");
  }
  const int tau = c.horizon;
  const Tensor self_mask = causal_mask(tau, tau, c.dtype);
  const Tensor cross_mask = causal_mask(tau, c.n_context, c.dtype);
  Tensor x = future_tokens;
  for (const DecLayerParams& layer : p.dec) {
    const Tensor n1 = ad::rmsnorm(x, layer.ln1_g, kNormEps);
    x = ad::add(x, multihead_attention(n1, n1, layer.self_attn, c.heads,
                                       self_mask, ctx));
    const Tensor n2 = ad::rmsnorm(x, layer.ln2_g, kNormEps);
    x = ad::add(x, multihead_attention(n2, context_out, layer.cross_attn,
                                       c.heads, cross_mask, ctx));
    const Tensor n3 = ad::rmsnorm(x, layer.ln3_g, kNormEps);
    x = ad::add(x, mlp_forward(n3, layer.mlp, ctx));
  }
  return x;
}

ForwardOutputs heads_forward(const Tensor& embeddings,
                             const VertiFormerParams& p) {
  const Tensor e = p.config.final_norm
                       ? ad::rmsnorm(embeddings, p.final_gain, kNormEps)
                       : embeddings;
  ForwardOutputs out;
  out.pose_deltas = affine(e, p.head_pose_w, p.head_pose_b);
  out.actions = ad::tanh(affine(e, p.head_act_w, p.head_act_b));
  if (p.config.patch_head) {
    out.patches = affine(e, p.head_patch_w, p.head_patch_b);
  }
  return out;
}

ForwardOutputs vertiformer_forward(const ForwardInputs& in, Mode mode,
                                   const VertiFormerParams& p,
                                   const DropoutCtx& ctx) {
  const ModelConfig& c = p.config;
  check_trailing(in.hist_actions, 2, "history actions");
  check_trailing(in.hist_deltas, 6, "history pose deltas");
  check_trailing(in.hist_patches, c.patch_dim(), "history patches");
  const std::int64_t batch = in.hist_actions.dim(0);
  const Tensor tokens =
      fuse_token(embed_actions(in.hist_actions, p),
                 embed_poses(in.hist_deltas, p),
                 embed_patches(in.hist_patches, p), p);
  const EncodeResult enc = encode_history(tokens, p, ctx);
  const Tensor future =
      build_future_tokens(mode, in.fut_actions, in.fut_deltas, batch, p);
  const Tensor decoded = decode_future(enc.context_out, future, p, ctx);
  return heads_forward(decoded, p);
}

}  // namespace vtf::model
