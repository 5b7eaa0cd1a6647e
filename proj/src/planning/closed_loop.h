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

#ifndef VTF_PLANNING_CLOSED_LOOP_H_
#define VTF_PLANNING_CLOSED_LOOP_H_

#include <cstdint>
#include <string>
#include <vector>

#include "planning/controllers.h"
#include "planning/mppi.h"
#include "terrainsim/sim.h"
#include "terrainsim/terrain.h"
#include "training/trainer.h"

namespace vtf::plan {

// Which controller drives the vehicle.
enum class ControllerKind { fkd_mppi, ikd_dijkstra, bc, random_walk };

const char* controller_kind_name(ControllerKind k);
ControllerKind parse_controller_kind(const std::string& name);

// Outcome of one trial. traversal_time, mean_abs_roll and mean_abs_pitch are
// recomputable from the recorded trace alone (see trace_metrics); success and
// failure add the terminal judgement.
struct RunMetrics {
  std::uint64_t world_seed = 0;
  bool success = false;
  std::string failure;  // "", "stuck", "rolled_over", "timeout", "no_path"
  int steps = 0;
  double traversal_time = 0.0;  // seconds
  double mean_abs_roll = 0.0;   // radians, over executed steps
  double mean_abs_pitch = 0.0;
};

struct ClosedLoopSummary {
  int n_runs = 0;
  int n_success = 0;
  double time_mean = 0.0;  // over successful runs; NaN when none
  double time_std = 0.0;   // population std over successful runs
  double mean_abs_roll = 0.0;   // over every executed step of every run
  double mean_abs_pitch = 0.0;
};

struct ClosedLoopConfig {
  ControllerKind controller = ControllerKind::fkd_mppi;
  sim::SimParams sim;
  sim::TerrainParams terrain;
  CostParams cost;
  int n_trials = 10;
  std::uint64_t world_seed_base = 9000;  // trial t uses world_seed_base + t
  std::uint64_t planner_seed = 1;
  int n_samples = 256;  // sampled control sequences per plan step
  int plan_steps = 0;   // planning horizon in steps; 0 = 6 * model horizon
  int max_steps = 200;  // timeout, control ticks
  bool oracle_model = false;  // true dynamics stand in for the model
  // History/horizon when no model supplies them (oracle or random runs).
  int history = 6;
  int horizon = 3;
  // Extra margin beyond safe_inset for the start pose and goal point.
  double goal_margin = 0.15;

  void validate() const;
};

struct TrialResult {
  RunMetrics metrics;
  sim::Episode trace;
};

struct ClosedLoopResult {
  std::vector<TrialResult> trials;
  ClosedLoopSummary summary;
  std::string csv;  // one row per trial
};

// The trace-derivable part of the metrics: number of executed steps
// (records - 1), traversal time in seconds, and the mean absolute roll and
// pitch over the poses after the starting record (zeros when no step ran).
RunMetrics trace_metrics(const sim::Episode& trace);

ClosedLoopSummary summarize(const std::vector<TrialResult>& trials);

// Runs n_trials held-out worlds (generated from world_seed_base + trial) to a
// terminal status or timeout. Goal-seeking controllers succeed on reaching
// the goal without stalling or rolling over; the behavior-cloning controller
// succeeds by crossing the far boundary band of the world. `model` and
// `stats` may be null only for oracle or random runs.
ClosedLoopResult closed_loop_eval(const training::AnyModel* model,
                                  const training::NormalizationStats* stats,
                                  const ClosedLoopConfig& cfg);

}  // namespace vtf::plan

#endif  // VTF_PLANNING_CLOSED_LOOP_H_
