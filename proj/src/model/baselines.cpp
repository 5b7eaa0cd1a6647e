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

#include "model/baselines.h"

#include <stdexcept>
#include <string>

namespace vtf::model {

namespace {

using ad::Tensor;

Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b) {
  return ad::add(ad::matmul(x, w), b);
}

}  // namespace

// ---- Encoder-only ----

EncoderOnlyParams EncoderOnlyParams::init(const ModelConfig& config,
                                          std::uint64_t seed) {
  config.validate();
  EncoderOnlyParams p;
  p.config = config;
  Rng rng(seed);
  const ad::DType dt = config.dtype;
  const int de = config.d_e();
  const int d = config.d_model;
  const int tau = config.horizon;

  p.w_a = init_weight(p.store, "embed.action.w", 2, de, rng, dt);
  p.b_a = init_bias(p.store, "embed.action.b", de, dt);
  p.w_p = init_weight(p.store, "embed.pose.w", 6, de, rng, dt);
  p.b_p = init_bias(p.store, "embed.pose.b", de, dt);
  p.w_i = init_weight(p.store, "embed.patch.w", config.patch_dim(), de, rng,
                      dt);
  p.b_i = init_bias(p.store, "embed.patch.b", de, dt);
  p.w_s = init_weight(p.store, "fuse.w", 3 * de, d, rng, dt);
  p.b_s = init_bias(p.store, "fuse.b", d, dt);
  p.mask_token = init_vector(p.store, "mask_token", {d}, rng, dt);
  for (int l = 0; l < config.enc_layers; ++l) {
    const std::string pre = "enc." + std::to_string(l);
    EncLayerParams layer;
    layer.ln1_g = init_gain(p.store, pre + ".ln1", d, dt);
    layer.attn = init_attention(p.store, pre + ".attn", d, rng, dt);
    layer.ln2_g = init_gain(p.store, pre + ".ln2", d, dt);
    layer.mlp = init_mlp(p.store, pre + ".mlp", d, config.mlp_dim, rng, dt);
    p.enc.push_back(std::move(layer));
  }
  p.recon_w = init_weight(p.store, "recon.w", d, d, rng, dt);
  p.recon_b = init_bias(p.store, "recon.b", d, dt);
  p.fkd_w = init_weight(p.store, "head.fkd.w", d, 6 * tau, rng, dt);
  p.fkd_b = init_bias(p.store, "head.fkd.b", 6 * tau, dt);
  p.ikd_w = init_weight(p.store, "head.ikd.w", d, 2 * tau, rng, dt);
  p.ikd_b = init_bias(p.store, "head.ikd.b", 2 * tau, dt);
  p.bc_w = init_weight(p.store, "head.bc.w", d, 2 * tau, rng, dt);
  p.bc_b = init_bias(p.store, "head.bc.b", 2 * tau, dt);
  return p;
}

EncoderOnlyOutputs encoder_only_forward(const Tensor& hist_actions,
                                        const Tensor& hist_deltas,
                                        const Tensor& hist_patches,
                                        const EncoderOnlyParams& p,
                                        double mask_ratio, Rng& mask_rng,
                                        const DropoutCtx& ctx) {
  const ModelConfig& c = p.config;
  if (mask_ratio < 0.0 || mask_ratio >= 1.0) {
    throw std::invalid_argument("encoder baseline: mask_ratio must be in "
                                "[0,1), got " + std::to_string(mask_ratio));
  }
  const std::int64_t batch = hist_actions.dim(0);
  const std::int64_t T = c.history;
  const std::int64_t d = c.d_model;

  const Tensor a_hat = affine(hist_actions, p.w_a, p.b_a);
  const Tensor p_hat = affine(hist_deltas, p.w_p, p.b_p);
  const Tensor i_hat = affine(hist_patches, p.w_i, p.b_i);
  const Tensor fused =
      affine(ad::concat({a_hat, p_hat, i_hat}, -1), p.w_s, p.b_s);

  // Per-(example, position) Bernoulli mask, expanded across the feature dim.
  std::vector<double> flags(static_cast<std::size_t>(batch) * T * d, 0.0);
  for (std::int64_t b = 0; b < batch; ++b) {
    for (std::int64_t t = 0; t < T; ++t) {
      if (mask_rng.uniform() < mask_ratio) {
        const std::size_t at = static_cast<std::size_t>((b * T + t) * d);
        std::fill_n(flags.begin() + at, d, 1.0);
      }
    }
  }
  const Tensor m = Tensor::from_data({batch, T, d}, std::move(flags), c.dtype);
  const Tensor keep = ad::scalar_add(ad::scalar_mul(m, -1.0), 1.0);
  const Tensor masked =
      ad::add(ad::mul(fused, keep),
              ad::mul(ad::broadcast_to(p.mask_token, {batch, T, d}), m));

  const Tensor pe = positional_encoding_rows(PeKind::sinusoidal, 0,
                                             static_cast<int>(T),
                                             static_cast<int>(d), Tensor());
  Tensor x = ad::add(masked, pe);
  const Tensor no_mask;
  for (const EncLayerParams& layer : p.enc) {
    x = encoder_block(x, layer, c.heads, no_mask, ctx);
  }

  EncoderOnlyOutputs out;
  out.recon = affine(x, p.recon_w, p.recon_b);
  out.recon_target = fused.detach();
  out.mask_flags = m;
  out.pooled = ad::mean_axis(x, 1);
  out.fkd_deltas = ad::reshape(affine(out.pooled, p.fkd_w, p.fkd_b),
                               {batch, c.horizon, 6});
  out.ikd_actions = ad::reshape(
      ad::tanh(affine(out.pooled, p.ikd_w, p.ikd_b)), {batch, c.horizon, 2});
  out.bc_actions = ad::reshape(
      ad::tanh(affine(out.pooled, p.bc_w, p.bc_b)), {batch, c.horizon, 2});
  return out;
}

std::int64_t encoder_only_param_count(const ModelConfig& config) {
  const std::int64_t d = config.d_model;
  const std::int64_t de = config.d_e();
  const std::int64_t m = config.mlp_dim;
  const std::int64_t tau = config.horizon;
  const std::int64_t attn = 4 * (d * d + d);
  const std::int64_t mlp = d * m + m + m * d + d;
  std::int64_t n = 0;
  n += (2 + 1) * de + (6 + 1) * de + (config.patch_dim() + 1) * de;
  n += 3 * de * d + d;  // fusion
  n += d;               // mask token
  n += config.enc_layers * (attn + mlp + 2 * d);
  n += d * d + d;  // reconstruction head
  n += (d + 1) * 6 * tau + 2 * ((d + 1) * 2 * tau);
  return n;
}

// ---- Decoder-only ----

DecoderOnlyParams DecoderOnlyParams::init(const ModelConfig& config,
                                          std::uint64_t seed) {
  config.validate();
  DecoderOnlyParams p;
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
  for (int l = 0; l < config.dec_layers; ++l) {
    const std::string pre = "dec." + std::to_string(l);
    EncLayerParams layer;
    layer.ln1_g = init_gain(p.store, pre + ".ln1", d, dt);
    layer.attn = init_attention(p.store, pre + ".attn", d, rng, dt);
    layer.ln2_g = init_gain(p.store, pre + ".ln2", d, dt);
    layer.mlp = init_mlp(p.store, pre + ".mlp", d, config.mlp_dim, rng, dt);
    p.layers.push_back(std::move(layer));
  }
  p.head_pose_w = init_weight(p.store, "head.pose.w", d, 6, rng, dt);
  p.head_pose_b = init_bias(p.store, "head.pose.b", 6, dt);
  p.head_act_w = init_weight(p.store, "head.action.w", d, 2, rng, dt);
  p.head_act_b = init_bias(p.store, "head.action.b", 2, dt);
  return p;
}

DecoderOnlyOutputs decoder_only_forward(const Tensor& actions,
                                        const Tensor& deltas,
                                        const Tensor& patches,
                                        const DecoderOnlyParams& p,
                                        const DropoutCtx& ctx) {
  const ModelConfig& c = p.config;
  if (actions.ndim() != 3 || actions.dim(1) < 1) {
    throw std::invalid_argument("decoder baseline: need at least one token");
  }
  const std::int64_t L = actions.dim(1);
  const Tensor a_hat = affine(actions, p.w_a, p.b_a);
  const Tensor p_hat = affine(deltas, p.w_p, p.b_p);
  const Tensor i_hat = affine(patches, p.w_i, p.b_i);
  const Tensor fused =
      affine(ad::concat({a_hat, p_hat, i_hat}, -1), p.w_s, p.b_s);
  const Tensor pe = positional_encoding_rows(PeKind::sinusoidal, 0,
                                             static_cast<int>(L), c.d_model,
                                             Tensor());
  Tensor x = ad::add(fused, pe);
  const Tensor mask =
      causal_mask(static_cast<int>(L), static_cast<int>(L), c.dtype);
  for (const EncLayerParams& layer : p.layers) {
    x = encoder_block(x, layer, c.heads, mask, ctx);
  }
  DecoderOnlyOutputs out;
  out.pose_deltas = affine(x, p.head_pose_w, p.head_pose_b);
  out.actions = ad::tanh(affine(x, p.head_act_w, p.head_act_b));
  return out;
}

std::int64_t decoder_only_param_count(const ModelConfig& config) {
  const std::int64_t d = config.d_model;
  const std::int64_t de = config.d_e();
  const std::int64_t m = config.mlp_dim;
  const std::int64_t attn = 4 * (d * d + d);
  const std::int64_t mlp = d * m + m + m * d + d;
  std::int64_t n = 0;
  n += (2 + 1) * de + (6 + 1) * de + (config.patch_dim() + 1) * de;
  n += 3 * de * d + d;
  n += config.dec_layers * (attn + mlp + 2 * d);
  n += (d + 1) * 6 + (d + 1) * 2;
  return n;
}

// ---- End-to-end ----

std::int64_t End2EndParams::feature_dim(const ModelConfig& config) {
  return 32 * config.history + 2 * config.history + 6 * config.history +
         2 * config.horizon;
}

End2EndParams End2EndParams::init(const ModelConfig& config,
                                  std::uint64_t seed) {
  End2EndParams p;
  p.config = config;
  Rng rng(seed);
  const ad::DType dt = config.dtype;
  const auto conv = [&](const std::string& name, int cout, int cin) {
    const double stddev = 1.0 / std::sqrt(static_cast<double>(cin * 9));
    ad::Tensor w = p.store.add(
        name + ".w", ad::Tensor::randn({cout, cin, 3, 3}, rng, stddev, dt));
    ad::Tensor b = p.store.add(name + ".b", ad::Tensor::zeros({cout}, dt));
    return std::pair(w, b);
  };
  std::tie(p.conv1_w, p.conv1_b) = conv("conv1", 8, 1);
  std::tie(p.conv2_w, p.conv2_b) = conv("conv2", 16, 8);
  std::tie(p.conv3_w, p.conv3_b) = conv("conv3", 32, 16);
  const std::int64_t in = feature_dim(config);
  p.fc1_w = init_weight(p.store, "fc1.w", in, 256, rng, dt);
  p.fc1_b = init_bias(p.store, "fc1.b", 256, dt);
  p.fc2_w = init_weight(p.store, "fc2.w", 256, 512, rng, dt);
  p.fc2_b = init_bias(p.store, "fc2.b", 512, dt);
  p.fc3_w = init_weight(p.store, "fc3.w", 512, 64, rng, dt);
  p.fc3_b = init_bias(p.store, "fc3.b", 64, dt);
  p.out_w = init_weight(p.store, "out.w", 64, 6 * config.horizon, rng, dt);
  p.out_b = init_bias(p.store, "out.b", 6 * config.horizon, dt);
  return p;
}

ad::Tensor end2end_forward(const Tensor& hist_actions, const Tensor& hist_deltas,
                           const Tensor& hist_patches,
                           const Tensor& fut_actions, const End2EndParams& p,
                           const DropoutCtx& ctx) {
  const ModelConfig& c = p.config;
  const std::int64_t batch = hist_actions.dim(0);
  const std::int64_t T = c.history;
  const std::int64_t P = c.patch_cells;
  // This baseline's dropout rate is part of its architecture.
  DropoutCtx e2e_ctx = ctx;
  e2e_ctx.rate = kEnd2EndDropout;

  Tensor x = ad::reshape(hist_patches, {batch * T, 1, P, P});
  x = ad::tanh(ad::conv2d(x, p.conv1_w, p.conv1_b, 2, 1));
  x = ad::tanh(ad::conv2d(x, p.conv2_w, p.conv2_b, 2, 1));
  x = ad::tanh(ad::conv2d(x, p.conv3_w, p.conv3_b, 2, 1));
  x = ad::mean_axis(ad::mean_axis(x, -1), -1);  // global average pool
  const Tensor patch_feats = ad::reshape(x, {batch, T * 32});

  const Tensor h = ad::concat(
      {patch_feats, ad::reshape(hist_actions, {batch, T * 2}),
       ad::reshape(hist_deltas, {batch, T * 6}),
       ad::reshape(fut_actions, {batch, c.horizon * 2LL})},
      -1);
  Tensor z = maybe_dropout(ad::tanh(affine(h, p.fc1_w, p.fc1_b)), e2e_ctx);
  z = maybe_dropout(ad::tanh(affine(z, p.fc2_w, p.fc2_b)), e2e_ctx);
  z = maybe_dropout(ad::tanh(affine(z, p.fc3_w, p.fc3_b)), e2e_ctx);
  return ad::reshape(affine(z, p.out_w, p.out_b), {batch, c.horizon, 6});
}

std::int64_t end2end_param_count(const ModelConfig& config) {
  std::int64_t n = 0;
  n += 8 * 1 * 9 + 8 + 16 * 8 * 9 + 16 + 32 * 16 * 9 + 32;
  const std::int64_t in = End2EndParams::feature_dim(config);
  n += in * 256 + 256 + 256 * 512 + 512 + 512 * 64 + 64;
  n += 64 * 6 * config.horizon + 6 * config.horizon;
  return n;
}

}  // namespace vtf::model
