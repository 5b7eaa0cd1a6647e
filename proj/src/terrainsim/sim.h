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

#ifndef VTF_TERRAINSIM_SIM_H_
#define VTF_TERRAINSIM_SIM_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "core/rng.h"
#include "geometry/pose.h"
#include "terrainsim/terrain.h"

namespace vtf::sim {

struct SimParams {
  double wheelbase = 0.3;   // meters
  double track = 0.2;       // meters
  double v_max = 0.4;       // m/s at full throttle
  double steer_max = 0.5;   // radians at full steering
  double dt = 1.0 / 3.0;    // seconds, 3 Hz control
  double clearance = 0.05;  // chassis height above the contact plane
  double slope_stall_threshold = 0.5;  // radians of climb that stall drive
  double rollover_limit = 0.55;        // radians of |roll| or |pitch|
  double k_slip = 0.5;                 // climb-slip gain
  double goal_radius = 0.2;            // meters
  int patch_cells = 16;                // P
  double patch_extent = 1.0;           // meters, body-aligned square side
};

enum class Status { running, stuck, rolled_over, at_goal };

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

struct SimState {
  geo::Pose pose;
  Status status = Status::running;
  int zero_motion_steps = 0;  // consecutive no-move ticks under throttle
};

struct EpisodeRecord {
  geo::Pose pose;
  geo::Action action;          // command applied over the step ending here
  std::vector<double> patch;   // row-major P*P, robot-relative heights
};

struct Episode {
  double dt = 1.0 / 3.0;
  int patch_h = 16;
  int patch_w = 16;
  std::uint64_t map_seed = 0;
  std::vector<EpisodeRecord> records;
};

// Margin the vehicle center must keep from the map border so the heading-
// aligned patch footprint (half-diagonal of the extent square) stays in
// bounds for any yaw.
double safe_inset(const SimParams& p, const ElevationMap& map);

// z/roll/pitch from a least-squares plane through the four wheel-contact
// elevations at body offsets (+-L/2, +-W/2); z is plane height at the center
// plus clearance.
geo::Pose settle_pose(const ElevationMap& map, double x, double y, double yaw,
                      const SimParams& p);

// One control tick of the analytic vehicle: climb-dependent slip and stall,
// kinematic bicycle yaw/planar update, attitude settled onto the terrain,
// then status transitions. Terminal states pass through unchanged. Map edges
// (inset by safe_inset) act as invisible walls: a blocked step moves nothing.
SimState step_dynamics(const SimState& s, const geo::Action& a,
                       const ElevationMap& map, const SimParams& p,
                       const std::optional<Vec2>& goal = std::nullopt);

// P x P heights sampled on a body-axis-aligned square of side extent_m
// centered on the pose and rotated by its yaw, each relative to the robot's
// contact plane (value = elevation - (pose.z - clearance)); flat ground reads
// zero. Row index follows body x (rear to front), column index body y.
std::vector<double> extract_patch(const ElevationMap& map,
                                  const geo::Pose& pose, int p_cells,
                                  double extent_m, double clearance);

// Pure-pursuit demonstration driver: proportional steering toward the goal,
// cruise throttle backed off on local slope, seeded Gaussian exploration
// noise, all clamped to [-1, 1].
geo::Action demo_policy_step(const SimState& s, const Vec2& goal,
                             const ElevationMap& map, Rng& rng,
                             double noise_scale);

// Controller callback; `target` is the active waypoint (empty when the
// episode has no goals). Controllers that need no goal ignore it.
using Policy =
    std::function<geo::Action(const SimState&, const std::optional<Vec2>&)>;

// Steps policy and dynamics at dt and records (pose, action, patch) per tick;
// record 0 holds the initial settled pose with a null action. Stops on a
// terminal status or after max_steps. Waypoints before the last switch when
// reached; only the last one terminates with at_goal. Episodes that end stuck
// or rolled over are kept.
Episode rollout_episode(const ElevationMap& map, double start_x,
                        double start_y, double start_yaw,
                        const std::vector<Vec2>& goals, const SimParams& p,
                        const Policy& policy, int max_steps,
                        std::uint64_t map_seed);

}  // namespace vtf::sim

#endif  // VTF_TERRAINSIM_SIM_H_
