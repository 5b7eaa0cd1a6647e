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

#ifndef VTF_PLANNING_MPPI_H_
#define VTF_PLANNING_MPPI_H_

#include <array>
#include <deque>
#include <memory>
#include <span>
#include <vector>

#include "core/rng.h"
#include "geometry/pose.h"
#include "terrainsim/sim.h"
#include "training/trainer.h"

namespace vtf::plan {

// Sampling-based planner knobs. The running cost per predicted step is
// w_dist * XY distance to goal + w_roll * |roll| + w_pitch * |pitch|;
// candidates are combined with weights proportional to
// exp(-(cost - min cost) / lambda).
struct CostParams {
  double w_dist = 1.0;
  double w_roll = 0.5;
  double w_pitch = 0.5;
  double goal_radius = 0.2;
  double lambda = 0.2;
  double sigma_throttle = 0.3;
  double sigma_steer = 0.3;

  void validate() const;
};

// Rolling window of the newest `capacity` steps in the episode-record
// convention: each entry holds the action applied over the step, the
// body-frame pose delta from the previous pose, and the terrain patch at the
// resulting pose. The buffer is constructed pre-filled with stationary copies
// of the initial observation so a full model input exists from the first
// tick. push_predicted appends a model-imagined step, composing the delta
// onto the running absolute pose and reusing the newest real patch — the only
// terrain available before the robot actually moves there.
class HistoryBuffer {
 public:
  HistoryBuffer(int capacity, const geo::Pose& start,
                std::vector<double> patch);

  void push_observed(const geo::Pose& pose, const geo::Action& action,
                     std::vector<double> patch);
  void push_predicted(const std::array<double, 6>& delta,
                      const geo::Action& action);

  int capacity() const { return capacity_; }
  int patch_dim() const { return patch_dim_; }
  const geo::Pose& current_pose() const { return current_; }

  // Entry i of the window, i = 0 oldest .. capacity-1 newest.
  const std::array<double, 6>& delta(int i) const { return entries_[i].delta; }
  const geo::Action& action(int i) const { return entries_[i].action; }
  const std::vector<double>& patch(int i) const { return *entries_[i].patch; }

 private:
  struct Entry {
    std::array<double, 6> delta{};
    geo::Action action;
    std::shared_ptr<const std::vector<double>> patch;
  };
  int capacity_ = 0;
  int patch_dim_ = 0;
  geo::Pose current_;
  std::deque<Entry> entries_;
};

// Batched multi-step forward dynamics: B history windows and B action blocks
// of `horizon` steps in, B*horizon body-frame pose deltas out (raw units,
// row-major by candidate).
class FkdPredictor {
 public:
  virtual ~FkdPredictor() = default;
  virtual int history() const = 0;
  virtual int horizon() const = 0;
  virtual int patch_dim() const = 0;
  virtual std::vector<std::array<double, 6>> predict(
      const std::vector<HistoryBuffer>& hists,
      std::span<const geo::Action> future) = 0;
};

// Trained-checkpoint dynamics: normalizes the history with the stored stats,
// runs the model's forward-prediction mode once for the whole batch, and
// denormalizes the predicted deltas.
class LearnedFkd : public FkdPredictor {
 public:
  LearnedFkd(const training::AnyModel* model,
             const training::NormalizationStats* stats);
  int history() const override;
  int horizon() const override;
  int patch_dim() const override;
  std::vector<std::array<double, 6>> predict(
      const std::vector<HistoryBuffer>& hists,
      std::span<const geo::Action> future) override;

 private:
  const training::AnyModel* model_;
  const training::NormalizationStats* stats_;
};

// True simulator dynamics standing in for the model: the planner's upper
// bound. Ignores everything in the history except the current absolute pose.
class OracleFkd : public FkdPredictor {
 public:
  OracleFkd(const sim::ElevationMap* map, const sim::SimParams* params,
            int history, int horizon);
  int history() const override { return history_; }
  int horizon() const override { return horizon_; }
  int patch_dim() const override;
  std::vector<std::array<double, 6>> predict(
      const std::vector<HistoryBuffer>& hists,
      std::span<const geo::Action> future) override;

 private:
  const sim::ElevationMap* map_;
  const sim::SimParams* params_;
  int history_;
  int horizon_;
};

// One sampled rollout: the action sequence, the predicted absolute poses it
// produces, and its accumulated running cost.
struct Candidate {
  std::vector<geo::Action> actions;
  std::vector<geo::Pose> poses;
  double cost = 0.0;
};

struct MppiResult {
  std::vector<geo::Action> sequence;  // weighted-average plan
  std::vector<Candidate> candidates;  // in draw order
  std::vector<double> weights;        // sum to 1
  int argmin = 0;                     // index of the min-cost candidate
};

// Softmax of negative cost at temperature lambda. The minimum is subtracted
// before exponentiating, so the weights are invariant to any common offset in
// the costs; they are normalized to sum to 1.
std::vector<double> mppi_weights(const std::vector<double>& costs,
                                 double lambda);

// Path-integral plan step. The nominal sequence is prev_optimal shifted left
// one step with the last action repeated (all zeros when prev_optimal is
// empty); n_samples candidates are drawn around it with Gaussian noise
// (sigma_throttle/sigma_steer), clamped to [-1, 1], and each is rolled out by
// chaining n_steps / model.horizon() predictor calls, appending the predicted
// steps to a copy of the history between calls. Returns the exponentially
// weighted average sequence; the argmin candidate is recovered as lambda -> 0.
// n_steps must be a positive multiple of model.horizon(); prev_optimal must be
// empty or of length n_steps.
MppiResult mppi_plan(FkdPredictor& model, const HistoryBuffer& hist,
                     const sim::Vec2& goal, const CostParams& cp,
                     int n_samples, int n_steps,
                     const std::vector<geo::Action>& prev_optimal, Rng& rng);

// Assembles a model batch from B history windows: normalized history
// channels, all future slots zeroed (callers overwrite the slots their mode
// consumes).
training::Batch history_batch(std::span<const HistoryBuffer> hists,
                              const training::NormalizationStats& stats,
                              int horizon, ad::DType dtype);

}  // namespace vtf::plan

#endif  // VTF_PLANNING_MPPI_H_
