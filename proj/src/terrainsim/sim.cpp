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

#include "terrainsim/sim.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace vtf::sim {

namespace {

constexpr double kMotionEps = 1e-9;
constexpr int kStuckSteps = 3;

bool attitude_exceeded(const geo::Pose& pose, const SimParams& p) {
  return std::abs(pose.roll) > p.rollover_limit ||
         std::abs(pose.pitch) > p.rollover_limit;
}

}  // namespace

double safe_inset(const SimParams& p, const ElevationMap& map) {
  return p.patch_extent * 0.5 * std::numbers::sqrt2 + map.resolution;
}

geo::Pose settle_pose(const ElevationMap& map, double x, double y, double yaw,
                      const SimParams& p) {
  const double c = std::cos(yaw), sn = std::sin(yaw);
  const double hl = p.wheelbase * 0.5, hw = p.track * 0.5;
  // Wheel contacts in body frame: front/rear x, left/right y.
  const double h_fl = sample_elevation(map, x + hl * c - hw * sn,
                                       y + hl * sn + hw * c);
  const double h_fr = sample_elevation(map, x + hl * c + hw * sn,
                                       y + hl * sn - hw * c);
  const double h_rl = sample_elevation(map, x - hl * c - hw * sn,
                                       y - hl * sn + hw * c);
  const double h_rr = sample_elevation(map, x - hl * c + hw * sn,
                                       y - hl * sn - hw * c);
  // Least-squares plane h = s_x*bx + s_y*by + c0; the symmetric contact
  // layout makes the normal equations diagonal.
  const double s_x = (h_fl + h_fr - h_rl - h_rr) / (2.0 * p.wheelbase);
  const double s_y = (h_fl - h_fr + h_rl - h_rr) / (2.0 * p.track);
  const double c0 = 0.25 * (h_fl + h_fr + h_rl + h_rr);
  geo::Pose out;
  out.x = x;
  out.y = y;
  out.z = c0 + p.clearance;
  out.roll = std::atan(s_y);    // +roll = left side raised
  out.pitch = -std::atan(s_x);  // -pitch = nose raised (ZYX convention)
  out.yaw = geo::wrap_angle(yaw);
  return out;
}

SimState step_dynamics(const SimState& s, const geo::Action& a_in,
                       const ElevationMap& map, const SimParams& p,
                       const std::optional<Vec2>& goal) {
  if (s.status != Status::running) return s;
  const geo::Action a = geo::clamp_action(a_in);

  // Climb angle along the direction of motion; positive means ascending.
  const double climb = a.throttle >= 0.0 ? -s.pose.pitch : s.pose.pitch;
  double v = p.v_max * a.throttle *
             std::max(0.0, 1.0 - p.k_slip * std::max(0.0, std::sin(climb)));
  if (climb > p.slope_stall_threshold && std::abs(a.throttle) > 0.0) v = 0.0;

  double x = s.pose.x, y = s.pose.y, yaw = s.pose.yaw;
  if (v != 0.0) {
    yaw = geo::wrap_angle(
        yaw + (v / p.wheelbase) * std::tan(p.steer_max * a.steering) * p.dt);
    const double ds = v * std::cos(s.pose.pitch) * p.dt;
    const double nx = x + ds * std::cos(yaw);
    const double ny = y + ds * std::sin(yaw);
    const double inset = safe_inset(p, map);
    if (nx >= map.origin_x + inset && nx <= map.max_x() - inset &&
        ny >= map.origin_y + inset && ny <= map.max_y() - inset) {
      x = nx;
      y = ny;
    } else {
      yaw = s.pose.yaw;  // invisible wall: the whole step is absorbed
    }
  }

  const double moved = std::hypot(x - s.pose.x, y - s.pose.y);
  SimState out = s;
  out.pose = settle_pose(map, x, y, yaw, p);
  if (attitude_exceeded(out.pose, p)) {
    out.status = Status::rolled_over;
    return out;
  }
  if (goal && std::hypot(goal->x - x, goal->y - y) <= p.goal_radius) {
    out.status = Status::at_goal;
    return out;
  }
  if (moved < kMotionEps && std::abs(a.throttle) > kMotionEps) {
    out.zero_motion_steps = s.zero_motion_steps + 1;
    if (out.zero_motion_steps >= kStuckSteps) out.status = Status::stuck;
  } else {
    out.zero_motion_steps = 0;
  }
  return out;
}

std::vector<double> extract_patch(const ElevationMap& map,
                                  const geo::Pose& pose, int p_cells,
                                  double extent_m, double clearance) {
  if (p_cells < 2 || extent_m <= 0) {
    throw std::invalid_argument("extract_patch: need p_cells >= 2, extent > 0");
  }
  const double c = std::cos(pose.yaw), sn = std::sin(pose.yaw);
  const double base = pose.z - clearance;
  std::vector<double> out(p_cells * p_cells);
  for (int i = 0; i < p_cells; ++i) {
    const double bx = -0.5 * extent_m + extent_m * i / (p_cells - 1);
    for (int j = 0; j < p_cells; ++j) {
      const double by = -0.5 * extent_m + extent_m * j / (p_cells - 1);
      const double wx = pose.x + bx * c - by * sn;
      const double wy = pose.y + bx * sn + by * c;
      out[i * p_cells + j] = sample_elevation(map, wx, wy) - base;
    }
  }
  return out;
}

geo::Action demo_policy_step(const SimState& s, const Vec2& goal,
                             const ElevationMap& map, Rng& rng,
                             double noise_scale) {
  (void)map;  // local slope is read from the settled attitude instead
  constexpr double kSteerGain = 2.0;
  constexpr double kCruise = 0.8;
  const double bearing =
      std::atan2(goal.y - s.pose.y, goal.x - s.pose.x);
  const double err = geo::wrap_angle(bearing - s.pose.yaw);
  const double slope = std::max(std::abs(s.pose.roll), std::abs(s.pose.pitch));
  geo::Action a;
  a.steering = kSteerGain * err;
  a.throttle = kCruise * std::max(0.25, 1.0 - 2.0 * slope);
  if (noise_scale > 0.0) {
    a.throttle += rng.normal(0.0, noise_scale);
    a.steering += rng.normal(0.0, noise_scale);
  }
  return geo::clamp_action(a);
}

Episode rollout_episode(const ElevationMap& map, double start_x,
                        double start_y, double start_yaw,
                        const std::vector<Vec2>& goals, const SimParams& p,
                        const Policy& policy, int max_steps,
                        std::uint64_t map_seed) {
  Episode ep;
  ep.dt = p.dt;
  ep.patch_h = p.patch_cells;
  ep.patch_w = p.patch_cells;
  ep.map_seed = map_seed;

  SimState s;
  s.pose = settle_pose(map, start_x, start_y, start_yaw, p);
  if (attitude_exceeded(s.pose, p)) s.status = Status::rolled_over;

  std::size_t goal_idx = 0;
  const auto active_goal = [&]() -> std::optional<Vec2> {
    if (goals.empty()) return std::nullopt;
    return goals[std::min(goal_idx, goals.size() - 1)];
  };

  ep.records.push_back({s.pose, geo::Action{},
                        extract_patch(map, s.pose, p.patch_cells,
                                      p.patch_extent, p.clearance)});
  for (int t = 1; t <= max_steps && s.status == Status::running; ++t) {
    const std::optional<Vec2> target = active_goal();
    const geo::Action a = policy(s, target);
    // Only the final waypoint terminates the run.
    const bool last = goals.empty() || goal_idx + 1 >= goals.size();
    s = step_dynamics(s, a, map, p, last ? target : std::nullopt);
    if (!last && target &&
        std::hypot(target->x - s.pose.x, target->y - s.pose.y) <=
            p.goal_radius) {
      ++goal_idx;
    }
    ep.records.push_back({s.pose, a,
                          extract_patch(map, s.pose, p.patch_cells,
                                        p.patch_extent, p.clearance)});
  }
  return ep;
}

}  // namespace vtf::sim
