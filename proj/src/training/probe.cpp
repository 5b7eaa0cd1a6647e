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

#include "training/probe.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "io/episode_io.h"
#include "model/vertiformer.h"
#include "training/optimizer.h"

namespace vtf::training {

namespace {

using ad::Tensor;
using model::DropoutCtx;

struct ProbeModel {
  ProbeVariant variant = ProbeVariant::unified;
  model::ModelConfig mc;
  model::ParamStore store;
  Tensor w_a, b_a, w_p, b_p, w_i, b_i;
  Tensor w_s, b_s;  // unified fusion only
  std::vector<model::EncLayerParams> enc;
  Tensor cls_w, cls_b;
};

ProbeModel init_probe(ProbeVariant variant, const model::ModelConfig& mc,
                      std::uint64_t seed) {
  ProbeModel pm;
  pm.variant = variant;
  pm.mc = mc;
  Rng rng(seed);
  const ad::DType dt = mc.dtype;
  const int d = mc.d_model;
  const int embed_out = variant == ProbeVariant::unified ? mc.d_e() : d;
  pm.w_a = model::init_weight(pm.store, "embed.action.w", 2, embed_out, rng, dt);
  pm.b_a = model::init_bias(pm.store, "embed.action.b", embed_out, dt);
  pm.w_p = model::init_weight(pm.store, "embed.pose.w", 6, embed_out, rng, dt);
  pm.b_p = model::init_bias(pm.store, "embed.pose.b", embed_out, dt);
  pm.w_i = model::init_weight(pm.store, "embed.patch.w", mc.patch_dim(),
                              embed_out, rng, dt);
  pm.b_i = model::init_bias(pm.store, "embed.patch.b", embed_out, dt);
  if (variant == ProbeVariant::unified) {
    pm.w_s = model::init_weight(pm.store, "fuse.w", 3 * mc.d_e(), d, rng, dt);
    pm.b_s = model::init_bias(pm.store, "fuse.b", d, dt);
  }
  for (int l = 0; l < mc.enc_layers; ++l) {
    const std::string pre = "enc." + std::to_string(l);
    model::EncLayerParams layer;
    layer.ln1_g = model::init_gain(pm.store, pre + ".ln1", d, dt);
    layer.attn = model::init_attention(pm.store, pre + ".attn", d, rng, dt);
    layer.ln2_g = model::init_gain(pm.store, pre + ".ln2", d, dt);
    layer.mlp = model::init_mlp(pm.store, pre + ".mlp", d, mc.mlp_dim, rng, dt);
    pm.enc.push_back(std::move(layer));
  }
  pm.cls_w = model::init_weight(pm.store, "cls.w", d, 2, rng, dt);
  pm.cls_b = model::init_bias(pm.store, "cls.b", 2, dt);
  return pm;
}

Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b) {
  return ad::add(ad::matmul(x, w), b);
}

Tensor probe_logits(const ProbeModel& pm, const Tensor& ha, const Tensor& hd,
                    const Tensor& hp, const DropoutCtx& ctx) {
  Tensor x;
  if (pm.variant == ProbeVariant::unified) {
    const Tensor fused = affine(
        ad::concat({affine(ha, pm.w_a, pm.b_a), affine(hd, pm.w_p, pm.b_p),
                    affine(hp, pm.w_i, pm.b_i)},
                   -1),
        pm.w_s, pm.b_s);
    x = ad::add(fused,
                model::positional_encoding_rows(
                    model::PeKind::sinusoidal, 0,
                    static_cast<int>(fused.dim(1)), pm.mc.d_model, Tensor()));
  } else {
    const Tensor tokens =
        ad::concat({affine(ha, pm.w_a, pm.b_a), affine(hd, pm.w_p, pm.b_p),
                    affine(hp, pm.w_i, pm.b_i)},
                   1);
    x = ad::add(tokens,
                model::positional_encoding_rows(
                    model::PeKind::sinusoidal, 0,
                    static_cast<int>(tokens.dim(1)), pm.mc.d_model, Tensor()));
  }
  const Tensor no_mask;
  for (const auto& layer : pm.enc) {
    x = model::encoder_block(x, layer, pm.mc.heads, no_mask, ctx);
  }
  return affine(ad::mean_axis(x, 1), pm.cls_w, pm.cls_b);
}

struct ProbeExample {
  Window w;
  bool shuffled = false;
  std::vector<int> perm;  // step order when shuffled
};

struct ProbeBatch {
  Tensor ha, hd, hp;
  std::vector<int> labels;  // 1 = shuffled
};

ProbeBatch make_probe_batch(const WindowDataset& ds,
                            const NormalizationStats& stats,
                            std::span<const ProbeExample> ex,
                            ad::DType dtype) {
  const std::int64_t B = static_cast<std::int64_t>(ex.size());
  const std::int64_t T = ds.history;
  const auto& ep0 = (*ds.episodes)[ex[0].w.episode];
  const std::int64_t pd = static_cast<std::int64_t>(ep0.patch_h) * ep0.patch_w;
  std::vector<double> ha(static_cast<std::size_t>(B * T * 2));
  std::vector<double> hd(static_cast<std::size_t>(B * T * 6));
  std::vector<double> hp(static_cast<std::size_t>(B * T * pd));
  ProbeBatch out;
  for (std::int64_t b = 0; b < B; ++b) {
    const ProbeExample& e = ex[static_cast<std::size_t>(b)];
    const auto& ep = (*ds.episodes)[e.w.episode];
    for (std::int64_t s = 0; s < T; ++s) {
      const std::int64_t src =
          e.w.start +
          (e.shuffled ? e.perm[static_cast<std::size_t>(s)] : s);
      const auto& rec = ep.records[static_cast<std::size_t>(src)];
      const auto nd = stats.normalize_delta(
          ds.deltas[e.w.episode][static_cast<std::size_t>(src)]);
      ha[static_cast<std::size_t>((b * T + s) * 2)] = rec.action.throttle;
      ha[static_cast<std::size_t>((b * T + s) * 2 + 1)] = rec.action.steering;
      for (int i = 0; i < 6; ++i) {
        hd[static_cast<std::size_t>((b * T + s) * 6 + i)] =
            nd[static_cast<std::size_t>(i)];
      }
      for (std::int64_t i = 0; i < pd; ++i) {
        hp[static_cast<std::size_t>((b * T + s) * pd + i)] =
            stats.normalize_patch(rec.patch[static_cast<std::size_t>(i)]);
      }
    }
    out.labels.push_back(e.shuffled ? 1 : 0);
  }
  out.ha = Tensor::from_data({B, T, 2}, std::move(ha), dtype);
  out.hd = Tensor::from_data({B, T, 6}, std::move(hd), dtype);
  out.hp = Tensor::from_data({B, T, pd}, std::move(hp), dtype);
  return out;
}

std::vector<int> non_identity_perm(int n, Rng& rng) {
  std::vector<int> p(static_cast<std::size_t>(n));
  while (true) {
    std::iota(p.begin(), p.end(), 0);
    for (std::size_t i = p.size(); i > 1; --i) {
      const std::size_t j = rng.uniform_index(i);
      std::swap(p[i - 1], p[j]);
    }
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (p[i] != static_cast<int>(i)) return p;
    }
  }
}

Tensor cross_entropy(const Tensor& logits, const std::vector<int>& labels) {
  const std::int64_t B = logits.dim(0);
  std::vector<double> onehot(static_cast<std::size_t>(B * 2), 0.0);
  for (std::int64_t b = 0; b < B; ++b) {
    onehot[static_cast<std::size_t>(b * 2 + labels[static_cast<std::size_t>(b)])] = 1.0;
  }
  const Tensor oh =
      Tensor::from_data({B, 2}, std::move(onehot), logits.dtype());
  const Tensor p = ad::scalar_add(ad::softmax(logits, -1), 1e-12);
  return ad::scalar_mul(ad::mean_all(ad::mul(ad::log(p), oh)), -2.0);
}

double accuracy(const Tensor& logits, const std::vector<int>& labels) {
  const auto v = logits.data();
  int hit = 0;
  for (std::size_t b = 0; b < labels.size(); ++b) {
    const int pred = v[b * 2 + 1] > v[b * 2] ? 1 : 0;
    if (pred == labels[b]) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(labels.size());
}

std::vector<Window> subsample(const std::vector<Window>& in, int cap) {
  if (cap <= 0 || static_cast<int>(in.size()) <= cap) return in;
  std::vector<Window> out;
  out.reserve(static_cast<std::size_t>(cap));
  for (int i = 0; i < cap; ++i) {
    out.push_back(in[static_cast<std::size_t>(
        static_cast<std::int64_t>(i) * static_cast<std::int64_t>(in.size()) /
        cap)]);
  }
  return out;
}

}  // namespace

const char* probe_variant_name(ProbeVariant v) {
  return v == ProbeVariant::unified ? "unified" : "separate";
}

ProbeCurves sequence_order_probe(ProbeVariant variant, const WindowDataset& ds,
                                 const ProbeConfig& config) {
  config.mc.validate();
  if (ds.history < 2) {
    throw std::invalid_argument("probe: need history >= 2 to shuffle");
  }
  const NormalizationStats stats = fit_normalization(ds);
  const std::vector<Window> train =
      subsample(ds.train_windows, config.max_train_windows);
  const std::vector<Window> val =
      subsample(ds.val_windows.empty() ? ds.train_windows : ds.val_windows,
                config.max_val_windows);

  ProbeModel pm = init_probe(variant, config.mc, config.seed);
  Rng base(config.seed);
  Rng shuffle_rng = base.fork(1);
  Rng perm_rng = base.fork(2);
  Rng drop_rng = base.fork(3);
  Rng val_rng = base.fork(4);

  // Fixed validation examples: alternating labels, permutations drawn once.
  std::vector<ProbeExample> val_ex;
  for (std::size_t i = 0; i < val.size(); ++i) {
    ProbeExample e;
    e.w = val[i];
    e.shuffled = (i % 2) == 1;
    if (e.shuffled) e.perm = non_identity_perm(ds.history, val_rng);
    val_ex.push_back(std::move(e));
  }

  TrainConfig opt_cfg;
  opt_cfg.lr = config.lr;
  opt_cfg.weight_decay = 0.0;
  AdamW opt(pm.store.items(), opt_cfg);

  const auto eval_probe = [&](double* loss_out) {
    ad::NoGradGuard guard;
    const DropoutCtx eval_ctx;
    double loss = 0.0;
    double acc = 0.0;
    std::size_t n = 0;
    for (std::size_t at = 0; at < val_ex.size();
         at += static_cast<std::size_t>(config.batch)) {
      const std::size_t take = std::min(
          static_cast<std::size_t>(config.batch), val_ex.size() - at);
      const ProbeBatch b = make_probe_batch(
          ds, stats, std::span<const ProbeExample>(val_ex.data() + at, take),
          config.mc.dtype);
      const Tensor logits = probe_logits(pm, b.ha, b.hd, b.hp, eval_ctx);
      loss += cross_entropy(logits, b.labels).item() *
              static_cast<double>(take);
      acc += accuracy(logits, b.labels) * static_cast<double>(take);
      n += take;
    }
    *loss_out = loss / static_cast<double>(n);
    return acc / static_cast<double>(n);
  };

  ProbeCurves curves;
  double vloss = 0.0;
  double vacc = eval_probe(&vloss);
  curves.val_acc.push_back(vacc);
  curves.val_loss.push_back(vloss);

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      const std::size_t j = shuffle_rng.uniform_index(i);
      std::swap(order[i - 1], order[j]);
    }
    // Balanced labels: alternate along the epoch order.
    std::vector<ProbeExample> epoch_ex;
    epoch_ex.reserve(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
      ProbeExample e;
      e.w = train[order[i]];
      e.shuffled = (i % 2) == 1;
      if (e.shuffled) e.perm = non_identity_perm(ds.history, perm_rng);
      epoch_ex.push_back(std::move(e));
    }
    for (std::size_t at = 0; at < epoch_ex.size();
         at += static_cast<std::size_t>(config.batch)) {
      const std::size_t take = std::min(
          static_cast<std::size_t>(config.batch), epoch_ex.size() - at);
      const ProbeBatch b = make_probe_batch(
          ds, stats,
          std::span<const ProbeExample>(epoch_ex.data() + at, take),
          config.mc.dtype);
      DropoutCtx ctx;
      ctx.training = true;
      ctx.rate = config.mc.dropout;
      ctx.rng = &drop_rng;
      const Tensor loss =
          cross_entropy(probe_logits(pm, b.ha, b.hd, b.hp, ctx), b.labels);
      loss.backward();
      opt.step();
      pm.store.zero_grads();
    }
    vacc = eval_probe(&vloss);
    curves.val_acc.push_back(vacc);
    curves.val_loss.push_back(vloss);
  }

  curves.final_acc = curves.val_acc.back();
  curves.final_loss = curves.val_loss.back();
  std::string csv = "epoch,val_acc,val_loss\n";
  for (std::size_t i = 0; i < curves.val_acc.size(); ++i) {
    csv += std::to_string(i) + "," + io::format_double(curves.val_acc[i]) +
           "," + io::format_double(curves.val_loss[i]) + "\n";
  }
  curves.csv = std::move(csv);
  return curves;
}

}  // namespace vtf::training
