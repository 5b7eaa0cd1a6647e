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

#include "training/trainer.h"

#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "io/episode_io.h"
#include "io/run_config.h"
#include "training/metrics.h"

namespace vtf::training {

namespace {

using ad::Tensor;
using model::DropoutCtx;
using model::Mode;

constexpr double kEncoderMaskRatio = 0.5;

Tensor mse(const Tensor& a, const Tensor& b) {
  const Tensor d = ad::sub(a, b);
  return ad::mean_all(ad::mul(d, d));
}

Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b) {
  return ad::add(ad::matmul(x, w), b);
}

model::ForwardInputs batch_inputs(const Batch& b, int horizon) {
  model::ForwardInputs in;
  in.hist_actions = b.hist_actions;
  in.hist_deltas = b.hist_deltas;
  in.hist_patches = b.hist_patches;
  const std::int64_t have = b.fut_actions.dim(1);
  if (have < horizon) {
    throw std::invalid_argument(
        "trainer: batch future is shorter than the model horizon");
  }
  in.fut_actions = have == horizon ? b.fut_actions
                                   : ad::slice(b.fut_actions, 1, 0, horizon);
  in.fut_deltas = have == horizon ? b.fut_deltas
                                  : ad::slice(b.fut_deltas, 1, 0, horizon);
  return in;
}

Batch clip_batch_future(const Batch& b, int horizon) {
  Batch out = b;
  if (b.fut_actions.dim(1) != horizon) {
    out.fut_actions = ad::slice(b.fut_actions, 1, 0, horizon);
    out.fut_deltas = ad::slice(b.fut_deltas, 1, 0, horizon);
    out.fut_patches = ad::slice(b.fut_patches, 1, 0, horizon);
  }
  return out;
}

void require_eval_tau(int eval_tau, int trained) {
  if (eval_tau > trained) {
    throw std::runtime_error("eval horizon " + std::to_string(eval_tau) +
                             " exceeds trained horizon " +
                             std::to_string(trained));
  }
  if (eval_tau < 1) throw std::invalid_argument("eval horizon must be >= 1");
}

// Rolling token buffers for the decoder baseline's autoregressive rollout.
struct ArState {
  std::int64_t B, T, pd;
  std::vector<double> acts, dels, pats;  // [B, T + steps, ch], grown per step

  ArState(const Batch& b, int steps) {
    B = b.hist_actions.dim(0);
    T = b.hist_actions.dim(1);
    pd = b.hist_patches.dim(2);
    const std::int64_t L = T + steps;
    acts.resize(static_cast<std::size_t>(B * L * 2));
    dels.resize(static_cast<std::size_t>(B * L * 6));
    pats.resize(static_cast<std::size_t>(B * L * pd));
    const auto copy_in = [&](std::span<const double> src,
                             std::vector<double>& dst, std::int64_t ch) {
      for (std::int64_t bb = 0; bb < B; ++bb) {
        std::copy_n(src.data() + bb * T * ch, T * ch,
                    dst.data() + bb * L * ch);
      }
    };
    copy_in(b.hist_actions.data(), acts, 2);
    copy_in(b.hist_deltas.data(), dels, 6);
    copy_in(b.hist_patches.data(), pats, pd);
    len_ = T;
    L_ = L;
  }

  // Tensors over the last T tokens.
  Tensor window(const std::vector<double>& buf, std::int64_t ch,
                ad::DType dtype) const {
    std::vector<double> out(static_cast<std::size_t>(B * T * ch));
    const std::int64_t first = len_ - T;
    for (std::int64_t bb = 0; bb < B; ++bb) {
      std::copy_n(buf.data() + (bb * L_ + first) * ch, T * ch,
                  out.data() + bb * T * ch);
    }
    return Tensor::from_data({B, T, ch}, std::move(out), dtype);
  }

  // Appends one token per example: explicit action + predicted delta; the
  // patch is carried forward from the previous token.
  void push(std::span<const double> action_bx2,
            std::span<const double> delta_bx6) {
    for (std::int64_t bb = 0; bb < B; ++bb) {
      std::copy_n(action_bx2.data() + bb * 2, 2,
                  acts.data() + (bb * L_ + len_) * 2);
      std::copy_n(delta_bx6.data() + bb * 6, 6,
                  dels.data() + (bb * L_ + len_) * 6);
      std::copy_n(pats.data() + (bb * L_ + len_ - 1) * pd, pd,
                  pats.data() + (bb * L_ + len_) * pd);
    }
    ++len_;
  }

  std::int64_t len() const { return len_; }

 private:
  std::int64_t len_ = 0;
  std::int64_t L_ = 0;
};

// Last-position predictions of a decoder forward pass: [B, 2] and [B, 6].
std::pair<std::vector<double>, std::vector<double>> last_position(
    const model::DecoderOnlyOutputs& out) {
  const std::int64_t B = out.pose_deltas.dim(0);
  const std::int64_t L = out.pose_deltas.dim(1);
  std::vector<double> act(static_cast<std::size_t>(B * 2));
  std::vector<double> del(static_cast<std::size_t>(B * 6));
  const auto av = out.actions.data();
  const auto dv = out.pose_deltas.data();
  for (std::int64_t b = 0; b < B; ++b) {
    std::copy_n(av.data() + (b * L + L - 1) * 2, 2, act.data() + b * 2);
    std::copy_n(dv.data() + (b * L + L - 1) * 6, 6, del.data() + b * 6);
  }
  return {std::move(act), std::move(del)};
}

Tensor decoder_rollout(const AnyModel& m, const Batch& batch, int steps,
                       bool use_given_actions, Tensor* actions_out) {
  const auto& p = *m.dec;
  const DropoutCtx eval_ctx;
  ArState st(batch, steps);
  const std::int64_t B = st.B;
  std::vector<double> deltas(static_cast<std::size_t>(B * steps * 6));
  std::vector<double> acts(static_cast<std::size_t>(B * steps * 2));
  const auto given = batch.fut_actions.data();
  const std::int64_t fut_stride = batch.fut_actions.dim(1) * 2;
  for (int k = 0; k < steps; ++k) {
    const Tensor a = st.window(st.acts, 2, m.config.dtype);
    const Tensor d = st.window(st.dels, 6, m.config.dtype);
    const Tensor i = st.window(st.pats, st.pd, m.config.dtype);
    const auto out = model::decoder_only_forward(a, d, i, p, eval_ctx);
    auto [act, del] = last_position(out);
    std::vector<double> next_action(static_cast<std::size_t>(B * 2));
    for (std::int64_t b = 0; b < B; ++b) {
      for (int c = 0; c < 2; ++c) {
        next_action[static_cast<std::size_t>(b * 2 + c)] =
            use_given_actions
                ? given[static_cast<std::size_t>(b * fut_stride + k * 2 + c)]
                : act[static_cast<std::size_t>(b * 2 + c)];
      }
      std::copy_n(del.data() + b * 6, 6,
                  deltas.data() + (b * steps + k) * 6);
      std::copy_n(next_action.data() + b * 2, 2,
                  acts.data() + (b * steps + k) * 2);
    }
    st.push(next_action, del);
  }
  if (actions_out != nullptr) {
    *actions_out =
        Tensor::from_data({B, steps, 2}, std::move(acts), m.config.dtype);
  }
  return Tensor::from_data({B, steps, 6}, std::move(deltas), m.config.dtype);
}

std::string format_loss(double v) {
  return std::isfinite(v) ? io::format_double(v) : "nan";
}

}  // namespace

const char* model_kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::vertiformer: return "vertiformer";
    case ModelKind::encoder: return "encoder";
    case ModelKind::decoder: return "decoder";
    case ModelKind::end2end: return "end2end";
  }
  return "?";
}

ModelKind parse_model_kind(const std::string& name) {
  if (name == "vertiformer") return ModelKind::vertiformer;
  if (name == "encoder") return ModelKind::encoder;
  if (name == "decoder") return ModelKind::decoder;
  if (name == "end2end") return ModelKind::end2end;
  throw std::invalid_argument(
      "unknown model kind \"" + name +
      "\" (expected vertiformer, encoder, decoder, or end2end)");
}

model::ParamStore& AnyModel::store() {
  switch (kind) {
    case ModelKind::vertiformer: return vf->store;
    case ModelKind::encoder: return enc->store;
    case ModelKind::decoder: return dec->store;
    case ModelKind::end2end: return e2e->store;
  }
  throw std::logic_error("bad model kind");
}

const model::ParamStore& AnyModel::store() const {
  return const_cast<AnyModel*>(this)->store();
}

AnyModel make_model(ModelKind kind, const model::ModelConfig& config,
                    std::uint64_t seed) {
  AnyModel m;
  m.kind = kind;
  m.config = config;
  switch (kind) {
    case ModelKind::vertiformer:
      m.vf = model::VertiFormerParams::init(config, seed);
      break;
    case ModelKind::encoder:
      m.enc = model::EncoderOnlyParams::init(config, seed);
      break;
    case ModelKind::decoder:
      m.dec = model::DecoderOnlyParams::init(config, seed);
      break;
    case ModelKind::end2end:
      m.e2e = model::End2EndParams::init(config, seed);
      break;
  }
  return m;
}

ad::Tensor predict_fkd(const AnyModel& m, const Batch& batch, int eval_tau) {
  ad::NoGradGuard guard;
  const DropoutCtx eval_ctx;
  const int tau = m.config.horizon;
  switch (m.kind) {
    case ModelKind::vertiformer: {
      require_eval_tau(eval_tau, tau);
      const auto out = model::vertiformer_forward(batch_inputs(batch, tau),
                                                  Mode::fkd, *m.vf, eval_ctx);
      return eval_tau == tau ? out.pose_deltas
                             : ad::slice(out.pose_deltas, 1, 0, eval_tau);
    }
    case ModelKind::encoder: {
      require_eval_tau(eval_tau, tau);
      Rng unused(0);
      const auto out = model::encoder_only_forward(
          batch.hist_actions, batch.hist_deltas, batch.hist_patches, *m.enc,
          0.0, unused, eval_ctx);
      return eval_tau == tau ? out.fkd_deltas
                             : ad::slice(out.fkd_deltas, 1, 0, eval_tau);
    }
    case ModelKind::decoder: {
      if (eval_tau > batch.fut_actions.dim(1)) {
        throw std::invalid_argument(
            "decoder rollout needs a future action per step");
      }
      return decoder_rollout(m, batch, eval_tau, /*use_given_actions=*/true,
                             nullptr);
    }
    case ModelKind::end2end: {
      require_eval_tau(eval_tau, tau);
      const Tensor fut = batch.fut_actions.dim(1) == tau
                             ? batch.fut_actions
                             : ad::slice(batch.fut_actions, 1, 0, tau);
      const Tensor out =
          model::end2end_forward(batch.hist_actions, batch.hist_deltas,
                                 batch.hist_patches, fut, *m.e2e, eval_ctx);
      return eval_tau == tau ? out : ad::slice(out, 1, 0, eval_tau);
    }
  }
  throw std::logic_error("bad model kind");
}

ad::Tensor predict_actions(const AnyModel& m, const Batch& batch,
                           model::Mode mode) {
  if (mode != Mode::ikd && mode != Mode::bc) {
    throw std::invalid_argument("predict_actions: mode must be ikd or bc");
  }
  ad::NoGradGuard guard;
  const DropoutCtx eval_ctx;
  switch (m.kind) {
    case ModelKind::vertiformer:
      return model::vertiformer_forward(batch_inputs(batch, m.config.horizon),
                                        mode, *m.vf, eval_ctx)
          .actions;
    case ModelKind::encoder: {
      Rng unused(0);
      const auto out = model::encoder_only_forward(
          batch.hist_actions, batch.hist_deltas, batch.hist_patches, *m.enc,
          0.0, unused, eval_ctx);
      return mode == Mode::ikd ? out.ikd_actions : out.bc_actions;
    }
    case ModelKind::decoder: {
      if (mode == Mode::ikd) {
        throw std::invalid_argument(
            "the decoder baseline cannot condition on desired poses (ikd)");
      }
      Tensor actions;
      decoder_rollout(m, batch, m.config.horizon,
                      /*use_given_actions=*/false, &actions);
      return actions;
    }
    case ModelKind::end2end:
      throw std::invalid_argument(
          "the end-to-end baseline predicts poses only");
  }
  throw std::logic_error("bad model kind");
}

namespace {

// Per-batch training loss for each model kind. Encoder phase 2 fits the task
// heads on a detached pooled embedding so the body stays frozen.
Tensor batch_loss(AnyModel& m, const Batch& batch, Mode mode,
                  bool encoder_head_phase, const DropoutCtx& ctx,
                  Rng& mask_rng) {
  switch (m.kind) {
    case ModelKind::vertiformer: {
      const auto out = model::vertiformer_forward(
          batch_inputs(batch, m.config.horizon), mode, *m.vf, ctx);
      return multitask_loss(out, clip_batch_future(batch, m.config.horizon),
                            mode, m.config);
    }
    case ModelKind::encoder: {
      auto& p = *m.enc;
      if (!encoder_head_phase) {
        const auto out = model::encoder_only_forward(
            batch.hist_actions, batch.hist_deltas, batch.hist_patches, p,
            kEncoderMaskRatio, mask_rng, ctx);
        const Tensor d = ad::sub(out.recon, out.recon_target);
        const auto flags = out.mask_flags.data();
        double count = 0.0;
        for (double f : flags) count += f;
        if (count < 1.0) return mse(out.recon, out.recon_target);
        return ad::scalar_mul(
            ad::sum_all(ad::mul(ad::mul(d, d), out.mask_flags)), 1.0 / count);
      }
      Rng unused(0);
      const auto out = model::encoder_only_forward(
          batch.hist_actions, batch.hist_deltas, batch.hist_patches, p, 0.0,
          unused, ctx);
      const Tensor pooled = out.pooled.detach();
      const Batch tgt = clip_batch_future(batch, m.config.horizon);
      const std::int64_t B = pooled.dim(0);
      const Tensor fkd = ad::reshape(affine(pooled, p.fkd_w, p.fkd_b),
                                     {B, m.config.horizon, 6});
      const Tensor ikd = ad::reshape(
          ad::tanh(affine(pooled, p.ikd_w, p.ikd_b)),
          {B, m.config.horizon, 2});
      const Tensor bc = ad::reshape(ad::tanh(affine(pooled, p.bc_w, p.bc_b)),
                                    {B, m.config.horizon, 2});
      return ad::add(ad::add(mse(fkd, tgt.fut_deltas),
                             mse(ikd, tgt.fut_actions)),
                     mse(bc, tgt.fut_actions));
    }
    case ModelKind::decoder: {
      const Tensor all_a =
          ad::concat({batch.hist_actions, batch.fut_actions}, 1);
      const Tensor all_d = ad::concat({batch.hist_deltas, batch.fut_deltas}, 1);
      const Tensor all_p =
          ad::concat({batch.hist_patches, batch.fut_patches}, 1);
      const std::int64_t L = all_a.dim(1);
      const auto out = model::decoder_only_forward(
          ad::slice(all_a, 1, 0, L - 1), ad::slice(all_d, 1, 0, L - 1),
          ad::slice(all_p, 1, 0, L - 1), *m.dec, ctx);
      return ad::add(
          mse(out.pose_deltas, ad::slice(all_d, 1, 1, L - 1)),
          mse(out.actions, ad::slice(all_a, 1, 1, L - 1)));
    }
    case ModelKind::end2end: {
      const Batch tgt = clip_batch_future(batch, m.config.horizon);
      const Tensor pred = model::end2end_forward(
          batch.hist_actions, batch.hist_deltas, batch.hist_patches,
          tgt.fut_actions, *m.e2e, ctx);
      return mse(pred, tgt.fut_deltas);
    }
  }
  throw std::logic_error("bad model kind");
}

double dataset_loss(AnyModel& m, const WindowDataset& ds,
                    const std::vector<Window>& windows,
                    const NormalizationStats& stats, Mode mode,
                    bool encoder_head_phase, int batch_size) {
  ad::NoGradGuard guard;
  const DropoutCtx eval_ctx;
  Rng unused(0);
  double total = 0.0;
  std::size_t n = 0;
  for (std::size_t at = 0; at < windows.size();
       at += static_cast<std::size_t>(batch_size)) {
    const std::size_t take = std::min(static_cast<std::size_t>(batch_size),
                                      windows.size() - at);
    const Batch b = make_batch(
        ds, std::span<const Window>(windows.data() + at, take), stats,
        m.config.dtype);
    total +=
        batch_loss(m, b, mode, encoder_head_phase, eval_ctx, unused).item() *
        static_cast<double>(take);
    n += take;
  }
  return total / static_cast<double>(n);
}

}  // namespace

io::Checkpoint make_checkpoint(const AnyModel& m, const TrainConfig& tc,
                               const NormalizationStats& stats) {
  io::Checkpoint ckpt;
  nlohmann::json cfg;
  cfg["kind"] = model_kind_name(m.kind);
  cfg["model"] = io::model_config_to_json(m.config);
  cfg["train"] = io::train_config_to_json(tc);
  ckpt.config_json = cfg.dump();
  ckpt.stats_json = stats.to_json();
  for (const auto& [name, t] : m.store().items()) {
    const auto v = t.data();
    ckpt.tensors.emplace_back(
        name, ad::Tensor::from_data(t.shape(),
                                    std::vector<double>(v.begin(), v.end()),
                                    t.dtype()));
  }
  return ckpt;
}

AnyModel restore_model(const io::Checkpoint& ckpt) {
  const nlohmann::json cfg = nlohmann::json::parse(ckpt.config_json);
  const ModelKind kind = parse_model_kind(cfg.at("kind").get<std::string>());
  const model::ModelConfig mc = io::model_config_from_json(cfg.at("model"));
  AnyModel m = make_model(kind, mc, /*seed=*/0);
  m.store().load_values(ckpt.tensors);
  return m;
}

NormalizationStats checkpoint_stats(const io::Checkpoint& ckpt) {
  return NormalizationStats::from_json(ckpt.stats_json);
}

TrainConfig checkpoint_train_config(const io::Checkpoint& ckpt) {
  const nlohmann::json cfg = nlohmann::json::parse(ckpt.config_json);
  return io::train_config_from_json(cfg.at("train"));
}

TrainResult train(ModelKind kind, const WindowDataset& ds,
                  const model::ModelConfig& mc, const TrainConfig& tc) {
  mc.validate();
  tc.validate();
  if (ds.train_windows.empty()) {
    throw std::invalid_argument("train: dataset has no training windows");
  }
  const NormalizationStats stats = fit_normalization(ds);
  AnyModel m = make_model(kind, mc, tc.seed);

  Rng base(tc.seed);
  Rng shuffle_rng = base.fork(1);
  Rng mode_rng = base.fork(2);
  Rng drop_rng = base.fork(3);
  Rng mask_rng = base.fork(4);

  AdamW opt(m.store().items(), tc);
  // The encoder baseline pretrains by reconstruction for the first half of
  // the epochs, then fits its task heads on the frozen body.
  const int enc_phase1 = kind == ModelKind::encoder ? (tc.epochs + 1) / 2 : 0;

  const auto val_loss_at = [&](int epoch0) {
    const bool head_phase =
        kind == ModelKind::encoder && epoch0 >= enc_phase1;
    const Mode eval_md = Mode::fkd;  // held-out loss is the fkd objective
    return ds.val_windows.empty()
               ? std::numeric_limits<double>::quiet_NaN()
               : dataset_loss(m, ds, ds.val_windows, stats, eval_md,
                              head_phase, tc.batch);
  };

  TrainResult res;
  const auto log_row = [&](int epoch, const std::string& mix, double tr,
                           double vl) {
    res.log.push_back(EpochLog{epoch, mix, tr, vl});
  };

  double init_val = val_loss_at(0);
  log_row(0, "init", std::numeric_limits<double>::quiet_NaN(), init_val);
  // The encoder's best checkpoint is selected during head fitting; other
  // kinds may keep their initialization if training never improves.
  bool best_valid = kind != ModelKind::encoder;
  res.best_val = best_valid ? init_val : 0.0;
  res.best_epoch = 0;
  res.best = make_checkpoint(m, tc, stats);

  std::vector<Window> order = ds.train_windows;
  for (int epoch0 = 0; epoch0 < tc.epochs; ++epoch0) {
    // Seeded Fisher-Yates shuffle per epoch.
    for (std::size_t i = order.size(); i > 1; --i) {
      const std::size_t j = shuffle_rng.uniform_index(i);
      std::swap(order[i - 1], order[j]);
    }
    const bool head_phase =
        kind == ModelKind::encoder && epoch0 >= enc_phase1;
    std::map<std::string, int> mix;
    double train_total = 0.0;
    std::size_t train_n = 0;
    int batch_index = 0;
    for (std::size_t at = 0; at < order.size();
         at += static_cast<std::size_t>(tc.batch), ++batch_index) {
      const std::size_t take = std::min(static_cast<std::size_t>(tc.batch),
                                        order.size() - at);
      Mode mode = Mode::fkd;
      if (kind == ModelKind::vertiformer) {
        mode = curriculum_mode(epoch0, mode_rng, tc);
        mix[model::mode_name(mode)] += 1;
      } else if (kind == ModelKind::encoder) {
        mix[head_phase ? "heads" : "recon"] += 1;
      } else {
        mix[kind == ModelKind::decoder ? "ntp" : "fkd"] += 1;
      }
      try {
        const Batch b = make_batch(
            ds, std::span<const Window>(order.data() + at, take), stats,
            mc.dtype);
        DropoutCtx ctx;
        ctx.training = true;
        ctx.rate = mc.dropout;
        ctx.rng = &drop_rng;
        const Tensor loss = batch_loss(m, b, mode, head_phase, ctx, mask_rng);
        const double lv = loss.item();
        if (!std::isfinite(lv)) {
          throw std::runtime_error("loss is not finite");
        }
        loss.backward();
        opt.step();
        m.store().zero_grads();
        train_total += lv * static_cast<double>(take);
        train_n += take;
      } catch (const std::exception& e) {
        throw std::runtime_error(
            "train: non-finite loss or failed step at epoch " +
            std::to_string(epoch0 + 1) + ", batch " +
            std::to_string(batch_index) + ": " + e.what());
      }
    }
    const double train_loss = train_total / static_cast<double>(train_n);
    const double val = val_loss_at(epoch0);
    std::string mix_str;
    for (const auto& [k, v] : mix) {
      if (!mix_str.empty()) mix_str += ",";
      mix_str += k + ":" + std::to_string(v);
    }
    log_row(epoch0 + 1, mix_str, train_loss, val);

    const bool eligible =
        kind != ModelKind::encoder || epoch0 >= enc_phase1;
    if (eligible && std::isfinite(val) && (!best_valid || val < res.best_val)) {
      best_valid = true;
      res.best_val = val;
      res.best_epoch = epoch0 + 1;
      res.best = make_checkpoint(m, tc, stats);
    }
  }

  res.final_ckpt = make_checkpoint(m, tc, stats);
  if (!best_valid) {  // e.g. encoder run with no head-fitting epochs
    res.best = res.final_ckpt;
    res.best_val = res.log.back().val_loss;
    res.best_epoch = tc.epochs;
  }

  std::string csv = "epoch,mode_mix,train_loss,val_loss\n";
  for (const EpochLog& row : res.log) {
    csv += std::to_string(row.epoch) + "," + row.mode_mix + "," +
           format_loss(row.train_loss) + "," + format_loss(row.val_loss) +
           "\n";
  }
  res.log_csv = std::move(csv);
  return res;
}

}  // namespace vtf::training
