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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "core/rng.h"
#include "terrainsim/sim.h"
#include "terrainsim/terrain.h"

using namespace vtf;
using namespace vtf::sim;

namespace {

constexpr double kPi = std::numbers::pi;

// Flat or inclined-plane map: height = kx * x + ky * y over size_m x size_m.
ElevationMap make_plane(double kx, double ky, double size_m = 6.0) {
  ElevationMap m;
  m.resolution = 0.05;
  m.width_cells = static_cast<int>(size_m / m.resolution) + 1;
  m.height_cells = m.width_cells;
  m.origin_x = 0.0;
  m.origin_y = 0.0;
  m.heights.assign(static_cast<std::size_t>(m.width_cells) * m.height_cells,
                   0.0);
  for (int iy = 0; iy < m.height_cells; ++iy)
    for (int ix = 0; ix < m.width_cells; ++ix)
      m.at(ix, iy) = kx * (ix * m.resolution) + ky * (iy * m.resolution);
  return m;
}

SimState settled_state(const ElevationMap& map, double x, double y, double yaw,
                       const SimParams& p) {
  SimState s;
  s.pose = settle_pose(map, x, y, yaw, p);
  return s;
}

}  // namespace

TEST_CASE("generate_terrain: deterministic, default grid, relief capped") {
  const TerrainParams tp;
  const ElevationMap a = generate_terrain(3, tp);
  const ElevationMap b = generate_terrain(3, tp);
  const ElevationMap c = generate_terrain(4, tp);
  CHECK(a.width_cells == 81);
  CHECK(a.height_cells == 51);
  CHECK(a.heights == b.heights);
  CHECK(a.heights != c.heights);
  CHECK(a.max_x() == doctest::Approx(4.0));
  CHECK(a.max_y() == doctest::Approx(2.5));
  CHECK(a.in_bounds(0.0, 0.0));
  CHECK(a.in_bounds(4.0, 2.5));
  CHECK(!a.in_bounds(4.01, 1.0));

  const auto [lo, hi] = std::minmax_element(a.heights.begin(), a.heights.end());
  CHECK(*hi - *lo <= tp.h_max + 1e-9);

  // Exaggerated bump parameters still respect the relief cap.
  TerrainParams wild = tp;
  wild.n_bumps = 200;
  wild.bump_height_max = 1.0;
  const ElevationMap w = generate_terrain(9, wild);
  const auto [wl, wh] = std::minmax_element(w.heights.begin(), w.heights.end());
  CHECK(*wh - *wl <= wild.h_max + 1e-9);
  CHECK(*wh - *wl > 0.5 * wild.h_max);  // and the cap actually binds
}

TEST_CASE("sample_elevation: bilinear hand values, out-of-bounds throws") {
  ElevationMap m;
  m.width_cells = 2;
  m.height_cells = 2;
  m.resolution = 1.0;
  m.heights = {0.0, 1.0, 2.0, 3.0};  // h(x,y) = x + 2y on the unit square
  CHECK(sample_elevation(m, 0.0, 0.0) == 0.0);
  CHECK(sample_elevation(m, 1.0, 1.0) == 3.0);
  CHECK(sample_elevation(m, 0.5, 0.5) == doctest::Approx(1.5));
  CHECK(sample_elevation(m, 0.25, 0.0) == doctest::Approx(0.25));
  CHECK(sample_elevation(m, 0.0, 0.75) == doctest::Approx(1.5));
  CHECK_THROWS(sample_elevation(m, -0.1, 0.5));
  CHECK_THROWS(sample_elevation(m, 0.5, 1.1));
}

TEST_CASE("settle_pose: flat is exact, inclined plane recovers the slope") {
  const SimParams p;
  const ElevationMap flat = make_plane(0.0, 0.0);
  const geo::Pose f = settle_pose(flat, 3.0, 3.0, 0.7, p);
  CHECK(f.z == p.clearance);
  CHECK(f.roll == 0.0);
  CHECK(f.pitch == 0.0);
  CHECK(f.yaw == doctest::Approx(0.7));

  // Facing straight uphill on slope k: nose raised, pitch = -atan(k).
  const double k = 0.2;
  const ElevationMap ramp = make_plane(k, 0.0);
  const geo::Pose up = settle_pose(ramp, 3.0, 3.0, 0.0, p);
  CHECK(up.pitch == doctest::Approx(-std::atan(k)).epsilon(1e-10));
  CHECK(up.roll == doctest::Approx(0.0));
  CHECK(up.z == doctest::Approx(k * 3.0 + p.clearance));

  // Facing +y on the same ramp, the left side (world -x) is downhill.
  const geo::Pose across = settle_pose(ramp, 3.0, 3.0, kPi / 2.0, p);
  CHECK(across.roll == doctest::Approx(-std::atan(k)).epsilon(1e-10));
  CHECK(across.pitch == doctest::Approx(0.0));
}

TEST_CASE("step_dynamics: straight drive covers v_max*dt per step") {
  const SimParams p;
  const ElevationMap flat = make_plane(0.0, 0.0);
  SimState s = settled_state(flat, 3.0, 3.0, 0.0, p);
  const double ds = p.v_max * p.dt;  // flat: cos(pitch) = 1
  for (int t = 1; t <= 3; ++t) {
    s = step_dynamics(s, {1.0, 0.0}, flat, p);
    CHECK(s.pose.x == doctest::Approx(3.0 + t * ds).epsilon(1e-12));
    CHECK(s.pose.y == doctest::Approx(3.0));
    CHECK(s.pose.yaw == 0.0);
    CHECK(s.status == Status::running);
  }
}

TEST_CASE("step_dynamics: bicycle yaw rate and closed turning circle") {
  const SimParams p;
  const ElevationMap flat = make_plane(0.0, 0.0);
  SimState s = settled_state(flat, 3.0, 3.0, 0.0, p);
  const double dyaw = (p.v_max / p.wheelbase) * std::tan(p.steer_max) * p.dt;
  s = step_dynamics(s, {1.0, 1.0}, flat, p);
  CHECK(s.pose.yaw == doctest::Approx(dyaw).epsilon(1e-12));

  // Full-lock driving traces a circle of radius L / tan(steer_max) ~ 0.55 m;
  // after one full revolution the vehicle is back near the start.
  SimState c = settled_state(flat, 3.0, 3.0, 0.0, p);
  const int steps_per_rev = static_cast<int>(std::round(2.0 * kPi / dyaw));
  double max_r = 0.0;
  for (int t = 0; t < steps_per_rev; ++t) {
    c = step_dynamics(c, {1.0, 1.0}, flat, p);
    REQUIRE(c.status == Status::running);
    max_r = std::max(max_r, std::hypot(c.pose.x - 3.0, c.pose.y - 3.0));
  }
  const double diameter = 2.0 * p.wheelbase / std::tan(p.steer_max);
  CHECK(std::hypot(c.pose.x - 3.0, c.pose.y - 3.0) < 0.1);
  CHECK(max_r < diameter + 0.1);
  CHECK(max_r > 0.8 * diameter);
}

TEST_CASE("step_dynamics: uphill slip slows, steep climb stalls to stuck") {
  const SimParams p;
  const ElevationMap mild = make_plane(0.3, 0.0);
  SimState s = settled_state(mild, 2.0, 3.0, 0.0, p);
  const double x0 = s.pose.x;
  s = step_dynamics(s, {1.0, 0.0}, mild, p);
  const double uphill_ds = s.pose.x - x0;
  CHECK(uphill_ds > 0.0);
  CHECK(uphill_ds < p.v_max * p.dt - 1e-6);

  // atan(0.6) > slope_stall_threshold: no motion, stuck after three tries.
  const ElevationMap steep = make_plane(0.6, 0.0);
  SimState st = settled_state(steep, 2.0, 3.0, 0.0, p);
  REQUIRE(std::abs(st.pose.pitch) < p.rollover_limit);
  for (int t = 0; t < 2; ++t) {
    st = step_dynamics(st, {1.0, 0.0}, steep, p);
    CHECK(st.status == Status::running);
    CHECK(st.pose.x == 2.0);
  }
  st = step_dynamics(st, {1.0, 0.0}, steep, p);
  CHECK(st.status == Status::stuck);

  // Reversing down the same slope is descending, so it still moves.
  SimState rev = settled_state(steep, 2.0, 3.0, 0.0, p);
  rev = step_dynamics(rev, {-1.0, 0.0}, steep, p);
  CHECK(rev.pose.x < 2.0);
}

TEST_CASE("step_dynamics: attitude beyond the limit rolls the vehicle over") {
  const SimParams p;
  const ElevationMap cliff = make_plane(0.7, 0.0);  // atan(0.7) > 0.55
  SimState s = settled_state(cliff, 2.0, 3.0, 0.0, p);
  s = step_dynamics(s, {1.0, 0.0}, cliff, p);
  CHECK(s.status == Status::rolled_over);
  // Terminal states pass through unchanged.
  const SimState after = step_dynamics(s, {1.0, 0.0}, cliff, p);
  CHECK(after.status == Status::rolled_over);
  CHECK(after.pose.x == s.pose.x);
}

TEST_CASE("step_dynamics: goal radius ends the run, walls absorb motion") {
  const SimParams p;
  const ElevationMap flat = make_plane(0.0, 0.0);
  SimState s = settled_state(flat, 1.0, 3.0, 0.0, p);
  const Vec2 goal{1.5, 3.0};
  int steps = 0;
  while (s.status == Status::running && steps < 10) {
    s = step_dynamics(s, {1.0, 0.0}, flat, p, goal);
    ++steps;
  }
  CHECK(s.status == Status::at_goal);
  CHECK(steps == 3);  // 0.4/3 m per step; within 0.2 m after three
  CHECK(std::hypot(s.pose.x - goal.x, s.pose.y - goal.y) <= p.goal_radius);

  // Driving into the inset boundary absorbs the step and eventually sticks.
  const double inset = safe_inset(p, flat);
  SimState w = settled_state(flat, flat.max_x() - inset - 0.02, 3.0, 0.0, p);
  const double wx = w.pose.x;
  for (int t = 0; t < 3; ++t) w = step_dynamics(w, {1.0, 0.0}, flat, p);
  CHECK(w.pose.x == wx);
  CHECK(w.status == Status::stuck);
}

TEST_CASE("extract_patch: zero on flat, oriented with the body frame") {
  const SimParams p;
  const ElevationMap flat = make_plane(0.0, 0.0);
  const geo::Pose fp = settle_pose(flat, 3.0, 3.0, 1.1, p);
  for (double v : extract_patch(flat, fp, 8, 1.0, p.clearance))
    CHECK(v == doctest::Approx(0.0).epsilon(1e-12));

  // On slope k facing uphill, rows (body x, rear to front) rise linearly.
  const double k = 0.2;
  const ElevationMap ramp = make_plane(k, 0.0);
  const geo::Pose up = settle_pose(ramp, 3.0, 3.0, 0.0, p);
  const int pc = 8;
  const auto patch = extract_patch(ramp, up, pc, 1.0, p.clearance);
  REQUIRE(patch.size() == static_cast<std::size_t>(pc * pc));
  CHECK(patch[0] == doctest::Approx(-0.5 * k).epsilon(1e-9));
  CHECK(patch[(pc - 1) * pc] == doctest::Approx(0.5 * k).epsilon(1e-9));
  for (int i = 1; i < pc; ++i)
    CHECK(patch[i * pc] > patch[(i - 1) * pc]);
  // Within a row (constant body x) the ramp reads flat.
  for (int j = 1; j < pc; ++j)
    CHECK(patch[j] == doctest::Approx(patch[0]).epsilon(1e-9));

  // Facing +y, the gradient moves to the columns, falling with body y.
  const geo::Pose across = settle_pose(ramp, 3.0, 3.0, kPi / 2.0, p);
  const auto side = extract_patch(ramp, across, pc, 1.0, p.clearance);
  CHECK(side[0] == doctest::Approx(0.5 * k).epsilon(1e-9));
  CHECK(side[pc - 1] == doctest::Approx(-0.5 * k).epsilon(1e-9));

  CHECK_THROWS(extract_patch(flat, fp, 1, 1.0, p.clearance));
  CHECK_THROWS(extract_patch(flat, fp, 8, 0.0, p.clearance));
}

TEST_CASE("demo_policy_step: steers toward the goal, deterministic at zero noise") {
  const SimParams p;
  const ElevationMap flat = make_plane(0.0, 0.0);
  SimState s = settled_state(flat, 3.0, 3.0, 0.0, p);
  Rng rng(1);
  const geo::Action ahead = demo_policy_step(s, {5.0, 3.0}, flat, rng, 0.0);
  CHECK(ahead.steering == doctest::Approx(0.0));
  CHECK(ahead.throttle > 0.5);
  const geo::Action left = demo_policy_step(s, {3.0, 5.0}, flat, rng, 0.0);
  CHECK(left.steering == 1.0);  // pi/2 error saturates the gain
  const geo::Action right = demo_policy_step(s, {3.0, 1.0}, flat, rng, 0.0);
  CHECK(right.steering == -1.0);

  Rng r1(7), r2(7);
  const geo::Action n1 = demo_policy_step(s, {5.0, 3.0}, flat, r1, 0.1);
  const geo::Action n2 = demo_policy_step(s, {5.0, 3.0}, flat, r2, 0.1);
  CHECK(n1.throttle == n2.throttle);
  CHECK(n1.steering == n2.steering);
}

TEST_CASE("rollout_episode: leading settled record, waypoints, termination") {
  const SimParams p;
  const ElevationMap flat = make_plane(0.0, 0.0);
  Rng rng(2);
  const Policy pol = [&](const SimState& s,
                         const std::optional<Vec2>& goal) -> geo::Action {
    if (!goal) return {0.0, 0.0};
    return demo_policy_step(s, *goal, flat, rng, 0.0);
  };
  const std::vector<Vec2> goals{{4.0, 3.0}, {2.0, 3.0}};
  const Episode ep = rollout_episode(flat, 3.0, 3.0, 0.0, goals, p, pol, 120, 77);
  CHECK(ep.dt == p.dt);
  CHECK(ep.patch_h == p.patch_cells);
  CHECK(ep.patch_w == p.patch_cells);
  CHECK(ep.map_seed == 77);
  REQUIRE(ep.records.size() >= 2);

  // Record 0 is the settled start with a null action.
  CHECK(ep.records[0].action.throttle == 0.0);
  CHECK(ep.records[0].action.steering == 0.0);
  CHECK(ep.records[0].pose.x == 3.0);
  CHECK(ep.records[0].pose.z == p.clearance);

  // The run passed the first waypoint without terminating and ended at the
  // second (the final one) inside the goal radius.
  const geo::Pose& last = ep.records.back().pose;
  CHECK(std::hypot(last.x - goals.back().x, last.y - goals.back().y) <=
        p.goal_radius + 1e-12);
  bool reached_first = false;
  for (const auto& r : ep.records)
    if (std::hypot(r.pose.x - goals[0].x, r.pose.y - goals[0].y) <=
        p.goal_radius)
      reached_first = true;
  CHECK(reached_first);
  CHECK(ep.records.size() < 121);  // terminated before max_steps

  // Byte-identical rerun with a fresh rng stream.
  Rng rng2(2);
  const Policy pol2 = [&](const SimState& s,
                          const std::optional<Vec2>& goal) -> geo::Action {
    if (!goal) return {0.0, 0.0};
    return demo_policy_step(s, *goal, flat, rng2, 0.0);
  };
  const Episode ep2 =
      rollout_episode(flat, 3.0, 3.0, 0.0, goals, p, pol2, 120, 77);
  REQUIRE(ep2.records.size() == ep.records.size());
  for (std::size_t i = 0; i < ep.records.size(); ++i) {
    CHECK(ep.records[i].pose.x == ep2.records[i].pose.x);
    CHECK(ep.records[i].pose.yaw == ep2.records[i].pose.yaw);
    CHECK(ep.records[i].patch == ep2.records[i].patch);
  }
}
