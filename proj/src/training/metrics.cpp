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

#include "training/metrics.h"

#include <cmath>
#include <stdexcept>

#include "geometry/pose.h"

namespace vtf::training {

namespace {

constexpr std::size_t kEvalBatch = 256;
constexpr double kScaleFloor = 1e-6;

ad::Tensor mse(const ad::Tensor& a, const ad::Tensor& b) {
  const ad::Tensor d = ad::sub(a, b);
  return ad::mean_all(ad::mul(d, d));
}

}  // namespace

ad::Tensor multitask_loss(const model::ForwardOutputs& pred,
                          const Batch& target, model::Mode mode,
                          const model::ModelConfig& config) {
  (void)mode;  // both heads are supervised in every mode
  ad::Tensor loss = ad::add(mse(pred.pose_deltas, target.fut_deltas),
                            mse(pred.actions, target.fut_actions));
  if (config.patch_head) {
    if (!pred.patches.defined()) {
      throw std::invalid_argument(
          "multitask_loss: patch head enabled but no patch predictions");
    }
    loss = ad::add(loss, mse(pred.patches, target.fut_patches));
  }
  return loss;
}

OfflineReport evaluate_offline(const AnyModel& m, const WindowDataset& ds,
                               const NormalizationStats& stats,
                               model::Mode mode, int eval_tau) {
  if (eval_tau < 1 || eval_tau > ds.horizon) {
    throw std::invalid_argument(
        "evaluate_offline: eval horizon must be in [1, dataset horizon]");
  }
  if (ds.val_windows.empty()) {
    throw std::invalid_argument("evaluate_offline: empty validation split");
  }
  ad::NoGradGuard guard;
  const model::DropoutCtx eval_ctx;
  OfflineReport rep;
  rep.eval_tau = eval_tau;
  rep.n_windows = static_cast<int>(ds.val_windows.size());
  const int T = ds.history;

  if (mode == model::Mode::fkd) {
    // Per-component scale: population std of ground-truth displacement from
    // the last history pose, pooled over validation windows and steps.
    double sum[3] = {0, 0, 0};
    double sum_sq[3] = {0, 0, 0};
    std::int64_t n = 0;
    for (const Window& w : ds.val_windows) {
      const auto& recs = (*ds.episodes)[w.episode].records;
      const geo::Pose& base =
          recs[static_cast<std::size_t>(w.start + T - 1)].pose;
      for (int k = 0; k < eval_tau; ++k) {
        const geo::Pose& tr =
            recs[static_cast<std::size_t>(w.start + T + k)].pose;
        const double d[3] = {tr.x - base.x, tr.y - base.y, tr.z - base.z};
        for (int c = 0; c < 3; ++c) {
          sum[c] += d[c];
          sum_sq[c] += d[c] * d[c];
        }
        ++n;
      }
    }
    double scale[3];
    for (int c = 0; c < 3; ++c) {
      const double mean = sum[c] / static_cast<double>(n);
      const double var =
          std::max(0.0, sum_sq[c] / static_cast<double>(n) - mean * mean);
      scale[c] = std::max(kScaleFloor, std::sqrt(var));
    }

    double abs_err[3] = {0, 0, 0};
    double xy_final = 0.0;
    for (std::size_t at = 0; at < ds.val_windows.size(); at += kEvalBatch) {
      const std::size_t take =
          std::min(kEvalBatch, ds.val_windows.size() - at);
      const std::span<const Window> chunk(ds.val_windows.data() + at, take);
      const Batch batch = make_batch(ds, chunk, stats, m.config.dtype);
      const ad::Tensor pred = predict_fkd(m, batch, eval_tau);
      const auto pv = pred.data();
      for (std::size_t b = 0; b < take; ++b) {
        const Window& w = chunk[b];
        const auto& recs = (*ds.episodes)[w.episode].records;
        geo::Pose pose =
            recs[static_cast<std::size_t>(w.start + T - 1)].pose;
        for (int k = 0; k < eval_tau; ++k) {
          std::array<double, 6> nd;
          for (int i = 0; i < 6; ++i) {
            nd[static_cast<std::size_t>(i)] =
                pv[(b * static_cast<std::size_t>(eval_tau) +
                    static_cast<std::size_t>(k)) * 6 +
                   static_cast<std::size_t>(i)];
          }
          pose = geo::compose(
              pose, geo::pose_from_array(stats.denormalize_delta(nd)));
          const geo::Pose& tr =
              recs[static_cast<std::size_t>(w.start + T + k)].pose;
          abs_err[0] += std::abs(pose.x - tr.x);
          abs_err[1] += std::abs(pose.y - tr.y);
          abs_err[2] += std::abs(pose.z - tr.z);
          if (k == eval_tau - 1) {
            xy_final += std::hypot(pose.x - tr.x, pose.y - tr.y);
          }
        }
      }
    }
    const double denom = static_cast<double>(n);
    rep.err_x = abs_err[0] / denom / scale[0];
    rep.err_y = abs_err[1] / denom / scale[1];
    rep.err_z = abs_err[2] / denom / scale[2];
    rep.err_avg = (rep.err_x + rep.err_y + rep.err_z) / 3.0;
    rep.final_xy_err =
        xy_final / static_cast<double>(ds.val_windows.size());
    return rep;
  }

  if (mode != model::Mode::ikd && mode != model::Mode::bc) {
    throw std::invalid_argument("evaluate_offline: mode must be fkd/ikd/bc");
  }
  double abs_err = 0.0;
  std::int64_t n = 0;
  for (std::size_t at = 0; at < ds.val_windows.size(); at += kEvalBatch) {
    const std::size_t take = std::min(kEvalBatch, ds.val_windows.size() - at);
    const std::span<const Window> chunk(ds.val_windows.data() + at, take);
    const Batch batch = make_batch(ds, chunk, stats, m.config.dtype);
    const ad::Tensor pred = predict_actions(m, batch, mode);
    const auto pv = pred.data();
    const auto tv = batch.fut_actions.data();  // actions are identity-scaled
    const std::size_t per = static_cast<std::size_t>(eval_tau) * 2;
    const std::size_t pred_stride = static_cast<std::size_t>(pred.dim(1)) * 2;
    const std::size_t tgt_stride =
        static_cast<std::size_t>(batch.fut_actions.dim(1)) * 2;
    if (per > pred_stride || per > tgt_stride) {
      throw std::invalid_argument(
          "evaluate_offline: eval horizon exceeds predicted actions");
    }
    for (std::size_t b = 0; b < take; ++b) {
      for (std::size_t i = 0; i < per; ++i) {
        abs_err += std::abs(pv[b * pred_stride + i] - tv[b * tgt_stride + i]);
        ++n;
      }
    }
  }
  rep.action_mae = abs_err / static_cast<double>(n);
  return rep;
}

}  // namespace vtf::training
