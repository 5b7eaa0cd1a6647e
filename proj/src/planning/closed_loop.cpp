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

#include "planning/closed_loop.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>

#include "io/episode_io.h"
#include "planning/costmap.h"
#include "planning/dijkstra.h"

namespace vtf::plan {

const char* controller_kind_name(ControllerKind k) {
  switch (k) {
    case ControllerKind::fkd_mppi:
      return "fkd_mppi";
    case ControllerKind::ikd_dijkstra:
      return "ikd_dijkstra";
    case ControllerKind::bc:
      return "bc";
    case ControllerKind::random_walk:
      return "random_walk";
  }
  throw std::logic_error("bad controller kind");
}

ControllerKind parse_controller_kind(const std::string& name) {
  if (name == "fkd_mppi") return ControllerKind::fkd_mppi;
  if (name == "ikd_dijkstra") return ControllerKind::ikd_dijkstra;
  if (name == "bc") return ControllerKind::bc;
  if (name == "random_walk") return ControllerKind::random_walk;
  throw std::invalid_argument("unknown controller: " + name);
}

void ClosedLoopConfig::validate() const {
  if (n_trials < 1) throw std::invalid_argument("closed loop: n_trials >= 1");
  if (max_steps < 1) throw std::invalid_argument("closed loop: max_steps >= 1");
  if (n_samples < 1) throw std::invalid_argument("closed loop: n_samples >= 1");
  if (history < 1 || horizon < 1) {
    throw std::invalid_argument("closed loop: history/horizon >= 1");
  }
  if (goal_margin < 0.0) {
    throw std::invalid_argument("closed loop: goal_margin >= 0");
  }
  if (oracle_model && controller != ControllerKind::fkd_mppi) {
    throw std::invalid_argument(
        "closed loop: oracle dynamics only drive the sampling planner");
  }
  cost.validate();
}

RunMetrics trace_metrics(const sim::Episode& trace) {
  RunMetrics m;
  m.steps = static_cast<int>(trace.records.size()) - 1;
  if (m.steps < 0) m.steps = 0;
  m.traversal_time = m.steps * trace.dt;
  if (m.steps == 0) return m;
  double roll = 0.0;
  double pitch = 0.0;
  for (std::size_t i = 1; i < trace.records.size(); ++i) {
    roll += std::abs(trace.records[i].pose.roll);
    pitch += std::abs(trace.records[i].pose.pitch);
  }
  m.mean_abs_roll = roll / m.steps;
  m.mean_abs_pitch = pitch / m.steps;
  return m;
}

ClosedLoopSummary summarize(const std::vector<TrialResult>& trials) {
  ClosedLoopSummary s;
  s.n_runs = static_cast<int>(trials.size());
  double time_sum = 0.0;
  double time_sq = 0.0;
  double roll_sum = 0.0;
  double pitch_sum = 0.0;
  std::int64_t total_steps = 0;
  for (const TrialResult& t : trials) {
    if (t.metrics.success) {
      ++s.n_success;
      time_sum += t.metrics.traversal_time;
      time_sq += t.metrics.traversal_time * t.metrics.traversal_time;
    }
    roll_sum += t.metrics.mean_abs_roll * t.metrics.steps;
    pitch_sum += t.metrics.mean_abs_pitch * t.metrics.steps;
    total_steps += t.metrics.steps;
  }
  if (s.n_success > 0) {
    s.time_mean = time_sum / s.n_success;
    const double var =
        std::max(0.0, time_sq / s.n_success - s.time_mean * s.time_mean);
    s.time_std = std::sqrt(var);
  } else {
    s.time_mean = std::numeric_limits<double>::quiet_NaN();
    s.time_std = std::numeric_limits<double>::quiet_NaN();
  }
  if (total_steps > 0) {
    s.mean_abs_roll = roll_sum / total_steps;
    s.mean_abs_pitch = pitch_sum / total_steps;
  }
  return s;
}

namespace {

std::string metrics_csv(const std::vector<TrialResult>& trials,
                        ControllerKind controller) {
  std::string csv =
      "trial,world_seed,controller,success,failure,steps,traversal_time,"
      "mean_abs_roll,mean_abs_pitch\n";
  for (std::size_t i = 0; i < trials.size(); ++i) {
    const RunMetrics& m = trials[i].metrics;
    csv += std::to_string(i) + "," + std::to_string(m.world_seed) + "," +
           controller_kind_name(controller) + "," +
           (m.success ? "1" : "0") + "," + m.failure + "," +
           std::to_string(m.steps) + "," + io::format_double(m.traversal_time) +
           "," + io::format_double(m.mean_abs_roll) + "," +
           io::format_double(m.mean_abs_pitch) + "\n";
  }
  return csv;
}

}  // namespace

ClosedLoopResult closed_loop_eval(const training::AnyModel* model,
                                  const training::NormalizationStats* stats,
                                  const ClosedLoopConfig& cfg) {
  cfg.validate();
  const bool needs_model = !cfg.oracle_model &&
                           cfg.controller != ControllerKind::random_walk;
  if (needs_model && (model == nullptr || stats == nullptr)) {
    throw std::invalid_argument(
        "closed loop: this controller needs a trained model and its stats");
  }
  const int history = model != nullptr ? model->config.history : cfg.history;
  const int horizon = model != nullptr ? model->config.horizon : cfg.horizon;
  const int patch_cells =
      model != nullptr ? model->config.patch_cells : cfg.sim.patch_cells;
  const int plan_steps = cfg.plan_steps > 0 ? cfg.plan_steps : 6 * horizon;
  const training::NormalizationStats identity_stats;
  const training::NormalizationStats& use_stats =
      stats != nullptr ? *stats : identity_stats;

  ClosedLoopResult result;
  const Rng planner_base(cfg.planner_seed);
  for (int trial = 0; trial < cfg.n_trials; ++trial) {
    const std::uint64_t seed = cfg.world_seed_base + trial;
    const sim::ElevationMap map = sim::generate_terrain(seed, cfg.terrain);
    const double inset = sim::safe_inset(cfg.sim, map);
    const double sx = map.origin_x + inset + cfg.goal_margin;
    const double my = 0.5 * (map.origin_y + map.max_y());
    const sim::Vec2 goal{map.max_x() - inset - cfg.goal_margin, my};
    const double bc_line = map.max_x() - inset - 0.1;
    Rng rng = planner_base.fork(static_cast<std::uint64_t>(trial));

    TrialResult out;
    out.trace.dt = cfg.sim.dt;
    out.trace.patch_h = patch_cells;
    out.trace.patch_w = patch_cells;
    out.trace.map_seed = seed;

    sim::SimState state;
    state.pose = sim::settle_pose(map, sx, my, 0.0, cfg.sim);
    std::vector<double> patch =
        sim::extract_patch(map, state.pose, patch_cells, cfg.sim.patch_extent,
                           cfg.sim.clearance);
    out.trace.records.push_back({state.pose, geo::Action{}, patch});
    HistoryBuffer hist(history, state.pose, patch);

    // Controller-specific setup.
    std::optional<LearnedFkd> learned_holder;
    std::optional<OracleFkd> oracle_holder;
    FkdPredictor* predictor = nullptr;
    if (cfg.controller == ControllerKind::fkd_mppi) {
      if (cfg.oracle_model) {
        oracle_holder.emplace(&map, &cfg.sim, history, horizon);
        predictor = &*oracle_holder;
      } else {
        learned_holder.emplace(model, stats);
        predictor = &*learned_holder;
      }
    }
    std::vector<geo::Action> prev_optimal;
    std::vector<sim::Vec2> path_pts;
    bool no_path = false;
    if (cfg.controller == ControllerKind::ikd_dijkstra) {
      const Costmap cm = traversability_costmap(map);
      const auto sc = cm.cell_of(state.pose.x, state.pose.y);
      const auto gc = cm.cell_of(goal.x, goal.y);
      if (!cm.passable(sc.first, sc.second) ||
          !cm.passable(gc.first, gc.second)) {
        no_path = true;
      } else {
        const GridPath gp = dijkstra_plan(cm, sc, gc);
        if (!gp.found) {
          no_path = true;
        } else {
          path_pts.reserve(gp.cells.size());
          for (const auto& c : gp.cells) {
            path_pts.push_back(cm.center_of(c.first, c.second));
          }
        }
      }
    }

    std::string failure;
    bool success = false;
    if (no_path) {
      failure = "no_path";
    } else {
      const bool goal_seeking = cfg.controller != ControllerKind::bc;
      const std::optional<sim::Vec2> goal_opt =
          goal_seeking ? std::optional<sim::Vec2>(goal) : std::nullopt;
      for (int step = 0; step < cfg.max_steps; ++step) {
        geo::Action action;
        switch (cfg.controller) {
          case ControllerKind::fkd_mppi: {
            MppiResult plan =
                mppi_plan(*predictor, hist, goal, cfg.cost, cfg.n_samples,
                          plan_steps, prev_optimal, rng);
            prev_optimal = std::move(plan.sequence);
            action = prev_optimal.front();
            break;
          }
          case ControllerKind::ikd_dijkstra:
            action = ikd_controller_step(*model, use_stats, hist, path_pts,
                                         cfg.sim.v_max * cfg.sim.dt);
            break;
          case ControllerKind::bc:
            action = bc_controller_step(*model, use_stats, hist);
            break;
          case ControllerKind::random_walk:
            action = random_action(rng);
            break;
        }
        state = sim::step_dynamics(state, action, map, cfg.sim, goal_opt);
        patch = sim::extract_patch(map, state.pose, patch_cells,
                                   cfg.sim.patch_extent, cfg.sim.clearance);
        hist.push_observed(state.pose, action, patch);
        out.trace.records.push_back({state.pose, action, patch});
        if (state.status == sim::Status::at_goal) {
          success = true;
          break;
        }
        if (cfg.controller == ControllerKind::bc && state.pose.x >= bc_line) {
          success = true;
          break;
        }
        if (state.status == sim::Status::stuck) {
          failure = "stuck";
          break;
        }
        if (state.status == sim::Status::rolled_over) {
          failure = "rolled_over";
          break;
        }
      }
      if (!success && failure.empty()) failure = "timeout";
    }

    out.metrics = trace_metrics(out.trace);
    out.metrics.world_seed = seed;
    out.metrics.success = success;
    out.metrics.failure = failure;
    result.trials.push_back(std::move(out));
  }
  result.summary = summarize(result.trials);
  result.csv = metrics_csv(result.trials, cfg.controller);
  return result;
}

}  // namespace vtf::plan
