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

#include "planning/mppi.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace vtf::plan {

void CostParams::validate() const {
  if (w_dist < 0.0 || w_roll < 0.0 || w_pitch < 0.0) {
    throw std::invalid_argument("mppi: cost weights must be nonnegative");
  }
  if (goal_radius <= 0.0) {
    throw std::invalid_argument("mppi: goal_radius must be positive");
  }
  if (!(lambda > 0.0)) {
    throw std::invalid_argument("mppi: lambda must be positive");
  }
  if (sigma_throttle < 0.0 || sigma_steer < 0.0) {
    throw std::invalid_argument("mppi: sigmas must be nonnegative");
  }
}

HistoryBuffer::HistoryBuffer(int capacity, const geo::Pose& start,
                             std::vector<double> patch)
    : capacity_(capacity),
      patch_dim_(static_cast<int>(patch.size())),
      current_(start) {
  if (capacity < 1) {
    throw std::invalid_argument("history buffer: capacity must be >= 1");
  }
  if (patch.empty()) {
    throw std::invalid_argument("history buffer: empty patch");
  }
  const auto shared =
      std::make_shared<const std::vector<double>>(std::move(patch));
  for (int i = 0; i < capacity_; ++i) {
    entries_.push_back(Entry{{}, geo::Action{}, shared});
  }
}

void HistoryBuffer::push_observed(const geo::Pose& pose,
                                  const geo::Action& action,
                                  std::vector<double> patch) {
  if (static_cast<int>(patch.size()) != patch_dim_) {
    throw std::invalid_argument("history buffer: patch size changed");
  }
  Entry e;
  e.delta = geo::to_array(geo::relative(current_, pose));
  e.action = action;
  e.patch = std::make_shared<const std::vector<double>>(std::move(patch));
  current_ = pose;
  entries_.pop_front();
  entries_.push_back(std::move(e));
}

void HistoryBuffer::push_predicted(const std::array<double, 6>& delta,
                                   const geo::Action& action) {
  Entry e;
  e.delta = delta;
  e.action = action;
  e.patch = entries_.back().patch;
  current_ = geo::compose(current_, geo::pose_from_array(delta));
  entries_.pop_front();
  entries_.push_back(std::move(e));
}

training::Batch history_batch(std::span<const HistoryBuffer> hists,
                              const training::NormalizationStats& stats,
                              int horizon, ad::DType dtype) {
  if (hists.empty()) {
    throw std::invalid_argument("history_batch: no histories");
  }
  const std::int64_t b = static_cast<std::int64_t>(hists.size());
  const int t = hists[0].capacity();
  const int pd = hists[0].patch_dim();
  std::vector<double> ha(static_cast<std::size_t>(b) * t * 2);
  std::vector<double> hd(static_cast<std::size_t>(b) * t * 6);
  std::vector<double> hp(static_cast<std::size_t>(b) * t * pd);
  for (std::int64_t i = 0; i < b; ++i) {
    const HistoryBuffer& h = hists[i];
    if (h.capacity() != t || h.patch_dim() != pd) {
      throw std::invalid_argument("history_batch: mismatched buffers");
    }
    for (int k = 0; k < t; ++k) {
      const std::size_t row = static_cast<std::size_t>(i) * t + k;
      ha[row * 2 + 0] = h.action(k).throttle;
      ha[row * 2 + 1] = h.action(k).steering;
      const auto nd = stats.normalize_delta(h.delta(k));
      for (int c = 0; c < 6; ++c) hd[row * 6 + c] = nd[c];
      const std::vector<double>& p = h.patch(k);
      for (int c = 0; c < pd; ++c) {
        hp[row * pd + c] = stats.normalize_patch(p[c]);
      }
    }
  }
  training::Batch out;
  out.hist_actions = ad::Tensor::from_data({b, t, 2}, std::move(ha), dtype);
  out.hist_deltas = ad::Tensor::from_data({b, t, 6}, std::move(hd), dtype);
  out.hist_patches = ad::Tensor::from_data({b, t, pd}, std::move(hp), dtype);
  out.fut_actions = ad::Tensor::zeros({b, horizon, 2}, dtype);
  out.fut_deltas = ad::Tensor::zeros({b, horizon, 6}, dtype);
  out.fut_patches = ad::Tensor::zeros({b, horizon, pd}, dtype);
  return out;
}

LearnedFkd::LearnedFkd(const training::AnyModel* model,
                       const training::NormalizationStats* stats)
    : model_(model), stats_(stats) {
  if (model_ == nullptr || stats_ == nullptr) {
    throw std::invalid_argument("learned dynamics: null model or stats");
  }
}

int LearnedFkd::history() const { return model_->config.history; }
int LearnedFkd::horizon() const { return model_->config.horizon; }
int LearnedFkd::patch_dim() const {
  return model_->config.patch_cells * model_->config.patch_cells;
}

std::vector<std::array<double, 6>> LearnedFkd::predict(
    const std::vector<HistoryBuffer>& hists,
    std::span<const geo::Action> future) {
  const std::int64_t b = static_cast<std::int64_t>(hists.size());
  const int tau = horizon();
  if (static_cast<std::int64_t>(future.size()) != b * tau) {
    throw std::invalid_argument("learned dynamics: future block size");
  }
  const ad::DType dtype = model_->config.dtype;
  training::Batch batch = history_batch(hists, *stats_, tau, dtype);
  std::vector<double> fa(static_cast<std::size_t>(b) * tau * 2);
  for (std::size_t i = 0; i < future.size(); ++i) {
    fa[i * 2 + 0] = future[i].throttle;
    fa[i * 2 + 1] = future[i].steering;
  }
  batch.fut_actions =
      ad::Tensor::from_data({b, tau, 2}, std::move(fa), dtype);
  const ad::Tensor pred = training::predict_fkd(*model_, batch, tau);
  const auto vals = pred.data();
  std::vector<std::array<double, 6>> out(static_cast<std::size_t>(b) * tau);
  for (std::size_t r = 0; r < out.size(); ++r) {
    std::array<double, 6> d;
    for (int c = 0; c < 6; ++c) d[c] = vals[r * 6 + c];
    out[r] = stats_->denormalize_delta(d);
  }
  return out;
}

OracleFkd::OracleFkd(const sim::ElevationMap* map, const sim::SimParams* params,
                     int history, int horizon)
    : map_(map), params_(params), history_(history), horizon_(horizon) {
  if (map_ == nullptr || params_ == nullptr) {
    throw std::invalid_argument("oracle dynamics: null map or params");
  }
  if (history < 1 || horizon < 1) {
    throw std::invalid_argument("oracle dynamics: history/horizon >= 1");
  }
}

int OracleFkd::patch_dim() const {
  return params_->patch_cells * params_->patch_cells;
}

std::vector<std::array<double, 6>> OracleFkd::predict(
    const std::vector<HistoryBuffer>& hists,
    std::span<const geo::Action> future) {
  const std::size_t b = hists.size();
  if (future.size() != b * static_cast<std::size_t>(horizon_)) {
    throw std::invalid_argument("oracle dynamics: future block size");
  }
  std::vector<std::array<double, 6>> out(future.size());
  for (std::size_t i = 0; i < b; ++i) {
    sim::SimState s;
    s.pose = hists[i].current_pose();
    for (int k = 0; k < horizon_; ++k) {
      const sim::SimState next =
          sim::step_dynamics(s, future[i * horizon_ + k], *map_, *params_);
      out[i * horizon_ + k] = geo::to_array(geo::relative(s.pose, next.pose));
      s = next;
    }
  }
  return out;
}

std::vector<double> mppi_weights(const std::vector<double>& costs,
                                 double lambda) {
  if (costs.empty()) throw std::invalid_argument("mppi: no candidates");
  if (!(lambda > 0.0)) throw std::invalid_argument("mppi: lambda must be > 0");
  for (double c : costs) {
    if (!std::isfinite(c)) {
      throw std::runtime_error("mppi: non-finite candidate cost");
    }
  }
  const double min_c = *std::min_element(costs.begin(), costs.end());
  std::vector<double> w(costs.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < costs.size(); ++i) {
    w[i] = std::exp(-(costs[i] - min_c) / lambda);
    sum += w[i];
  }
  for (double& v : w) v /= sum;
  return w;
}

MppiResult mppi_plan(FkdPredictor& model, const HistoryBuffer& hist,
                     const sim::Vec2& goal, const CostParams& cp,
                     int n_samples, int n_steps,
                     const std::vector<geo::Action>& prev_optimal, Rng& rng) {
  cp.validate();
  if (n_samples < 1) throw std::invalid_argument("mppi: n_samples >= 1");
  const int tau = model.horizon();
  if (n_steps < 1 || n_steps % tau != 0) {
    throw std::invalid_argument(
        "mppi: n_steps must be a positive multiple of the model horizon");
  }
  if (!prev_optimal.empty() &&
      static_cast<int>(prev_optimal.size()) != n_steps) {
    throw std::invalid_argument("mppi: prev_optimal length mismatch");
  }
  if (hist.capacity() != model.history() ||
      hist.patch_dim() != model.patch_dim()) {
    throw std::invalid_argument("mppi: history buffer does not fit the model");
  }

  // Nominal sequence: previous plan shifted one step, last action repeated.
  std::vector<geo::Action> base(n_steps);
  if (!prev_optimal.empty()) {
    for (int t = 0; t + 1 < n_steps; ++t) base[t] = prev_optimal[t + 1];
    base[n_steps - 1] = prev_optimal[n_steps - 1];
  }

  MppiResult res;
  res.candidates.resize(n_samples);
  for (int i = 0; i < n_samples; ++i) {
    auto& cand = res.candidates[i];
    cand.actions.resize(n_steps);
    cand.poses.reserve(n_steps);
    for (int t = 0; t < n_steps; ++t) {
      cand.actions[t] = geo::clamp_action(
          {base[t].throttle + cp.sigma_throttle * rng.normal(),
           base[t].steering + cp.sigma_steer * rng.normal()});
    }
  }

  // Roll every candidate forward, one model horizon per chained call.
  std::vector<HistoryBuffer> hists(static_cast<std::size_t>(n_samples), hist);
  std::vector<geo::Action> block(static_cast<std::size_t>(n_samples) * tau);
  const int n_calls = n_steps / tau;
  for (int c = 0; c < n_calls; ++c) {
    for (int i = 0; i < n_samples; ++i) {
      for (int k = 0; k < tau; ++k) {
        block[static_cast<std::size_t>(i) * tau + k] =
            res.candidates[i].actions[c * tau + k];
      }
    }
    const auto deltas = model.predict(hists, block);
    for (int i = 0; i < n_samples; ++i) {
      for (int k = 0; k < tau; ++k) {
        const std::size_t r = static_cast<std::size_t>(i) * tau + k;
        hists[i].push_predicted(deltas[r], block[r]);
        res.candidates[i].poses.push_back(hists[i].current_pose());
      }
    }
  }

  std::vector<double> costs(n_samples);
  for (int i = 0; i < n_samples; ++i) {
    double c = 0.0;
    for (const geo::Pose& p : res.candidates[i].poses) {
      c += cp.w_dist * std::hypot(p.x - goal.x, p.y - goal.y) +
           cp.w_roll * std::abs(p.roll) + cp.w_pitch * std::abs(p.pitch);
    }
    res.candidates[i].cost = c;
    costs[i] = c;
  }
  res.weights = mppi_weights(costs, cp.lambda);
  res.argmin = static_cast<int>(
      std::min_element(costs.begin(), costs.end()) - costs.begin());

  res.sequence.resize(n_steps);
  for (int t = 0; t < n_steps; ++t) {
    double th = 0.0;
    double st = 0.0;
    for (int i = 0; i < n_samples; ++i) {
      th += res.weights[i] * res.candidates[i].actions[t].throttle;
      st += res.weights[i] * res.candidates[i].actions[t].steering;
    }
    res.sequence[t] = geo::clamp_action({th, st});
  }
  return res;
}

}  // namespace vtf::plan
