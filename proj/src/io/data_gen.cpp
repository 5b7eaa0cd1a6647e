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

#include "io/data_gen.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <stdexcept>

#include "core/rng.h"

namespace vtf::io {

void DataGenConfig::validate() const {
  if (duration_s < 0.0) {
    throw std::invalid_argument("data gen: duration must be >= 0");
  }
  if (goals_per_episode < 1) {
    throw std::invalid_argument("data gen: goals_per_episode >= 1");
  }
  if (max_steps_per_episode < 1) {
    throw std::invalid_argument("data gen: max_steps_per_episode >= 1");
  }
  if (noise_scale < 0.0) {
    throw std::invalid_argument("data gen: noise_scale >= 0");
  }
  if (margin < 0.0) {
    throw std::invalid_argument("data gen: margin >= 0");
  }
  if (lateral_span < 0.0 || lateral_span > 1.0) {
    throw std::invalid_argument("data gen: lateral_span in [0, 1]");
  }
}

Manifest generate_corpus(const DataGenConfig& cfg, const std::string& out_dir) {
  cfg.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) {
    throw std::runtime_error("data gen: cannot create " + out_dir + ": " +
                             ec.message());
  }
  const std::int64_t target_steps =
      static_cast<std::int64_t>(std::llround(cfg.duration_s / cfg.sim.dt));
  Manifest manifest;
  const Rng base(cfg.seed);
  int stillborn = 0;
  for (std::int64_t e = 0; manifest.total_steps < target_steps; ++e) {
    if (stillborn > 1000) {
      throw std::runtime_error(
          "data gen: rollouts are not producing any steps");
    }
    const std::uint64_t world_seed = cfg.seed + static_cast<std::uint64_t>(e);
    const sim::ElevationMap map = sim::generate_terrain(world_seed, cfg.terrain);
    const double inset = sim::safe_inset(cfg.sim, map) + cfg.margin;
    const double lo_x = map.origin_x + inset;
    const double hi_x = map.max_x() - inset;
    const double lo_y = map.origin_y + inset;
    const double hi_y = map.max_y() - inset;
    if (lo_x >= hi_x || lo_y >= hi_y) {
      throw std::runtime_error("data gen: world too small for the vehicle");
    }
    const double mid_y = 0.5 * (lo_y + hi_y);
    const double half_span = 0.5 * cfg.lateral_span * (hi_y - lo_y);
    Rng rng = base.fork(static_cast<std::uint64_t>(e));

    const double start_y = mid_y + rng.uniform(-half_span, half_span);
    const double start_yaw = rng.uniform(-0.3, 0.3);
    // Waypoints alternate between the far and near side of the world, each
    // with its own lateral offset, so demonstrations include turns both ways.
    std::vector<sim::Vec2> goals;
    for (int g = 0; g < cfg.goals_per_episode; ++g) {
      const double gx = (g % 2 == 0) ? hi_x : lo_x;
      goals.push_back({gx, mid_y + rng.uniform(-half_span, half_span)});
    }
    sim::Policy policy = [&](const sim::SimState& s,
                             const std::optional<sim::Vec2>& goal) {
      if (!goal.has_value()) return geo::Action{0.0, 0.0};
      return sim::demo_policy_step(s, *goal, map, rng, cfg.noise_scale);
    };
    const sim::Episode ep =
        sim::rollout_episode(map, lo_x, start_y, start_yaw, goals, cfg.sim,
                             policy, cfg.max_steps_per_episode, world_seed);
    const std::int64_t steps =
        static_cast<std::int64_t>(ep.records.size()) - 1;
    if (steps < 1) {  // stillborn rollout; try the next world
      ++stillborn;
      continue;
    }
    stillborn = 0;

    char name[40];
    std::snprintf(name, sizeof(name), "episode_%05d.jsonl",
                  static_cast<int>(manifest.episodes.size()));
    write_episode((std::filesystem::path(out_dir) / name).string(), ep);
    manifest.episodes.push_back({name, steps, world_seed});
    manifest.total_steps += steps;
  }
  write_manifest((std::filesystem::path(out_dir) / "manifest.json").string(),
                 manifest);
  return manifest;
}

std::vector<sim::Episode> load_corpus(const std::string& manifest_path) {
  const Manifest manifest = read_manifest(manifest_path);
  const std::filesystem::path dir =
      std::filesystem::path(manifest_path).parent_path();
  std::vector<sim::Episode> episodes;
  episodes.reserve(manifest.episodes.size());
  for (const ManifestEntry& entry : manifest.episodes) {
    episodes.push_back(read_episode((dir / entry.file).string()));
  }
  return episodes;
}

}  // namespace vtf::io
