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

#ifndef VTF_IO_DATA_GEN_H_
#define VTF_IO_DATA_GEN_H_

#include <cstdint>
#include <string>
#include <vector>

#include "io/episode_io.h"
#include "terrainsim/sim.h"
#include "terrainsim/terrain.h"

namespace vtf::io {

// Synthetic demonstration corpus: one generated world per episode, a
// demonstration driver shuttling between waypoints on it. A "step" is one
// control tick (records minus the initial pose).
struct DataGenConfig {
  sim::SimParams sim;
  sim::TerrainParams terrain;
  double duration_s = 3600.0;  // stop once total steps cover this much time
  std::uint64_t seed = 0;      // world seeds and policy noise derive from it
  int goals_per_episode = 3;   // waypoints ping-ponging across the world
  int max_steps_per_episode = 400;
  double noise_scale = 0.1;    // demonstration exploration noise
  double margin = 0.15;        // start/waypoint inset beyond safe_inset
  double lateral_span = 0.8;   // waypoint y jitter as a fraction of free span

  void validate() const;
};

// Rolls out episodes until the accumulated steps reach
// duration_s / sim.dt (none when duration_s = 0), writing
// episode_%05d.jsonl files plus manifest.json into out_dir (created if
// missing). Episode e runs on the world seeded seed + e with a policy-noise
// stream forked from seed. Returns the manifest it wrote. Deterministic:
// identical config produces byte-identical files.
Manifest generate_corpus(const DataGenConfig& cfg, const std::string& out_dir);

// Reads every episode listed in a manifest, in listing order.
std::vector<sim::Episode> load_corpus(const std::string& manifest_path);

}  // namespace vtf::io

#endif  // VTF_IO_DATA_GEN_H_
