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

#ifndef VTF_IO_EPISODE_IO_H_
#define VTF_IO_EPISODE_IO_H_

#include <cstdint>
#include <string>
#include <vector>

#include "terrainsim/sim.h"

namespace vtf::io {

// Shortest decimal form that parses back to exactly the same double.
std::string format_double(double v);

// Line-oriented episode file: line 1 is a header object
// {version, dt, patch_h, patch_w, n_records, map_seed}; each following line
// is one record {t, pose[6], action[2], patch[P*P]}. Writing is
// deterministic, so write -> read -> write is byte-identical.
void write_episode(const std::string& path, const sim::Episode& episode);
sim::Episode read_episode(const std::string& path);

struct ManifestEntry {
  std::string file;
  std::int64_t steps = 0;
  std::uint64_t seed = 0;
};

struct Manifest {
  std::vector<ManifestEntry> episodes;
  std::int64_t total_steps = 0;
};

void write_manifest(const std::string& path, const Manifest& manifest);
Manifest read_manifest(const std::string& path);

}  // namespace vtf::io

#endif  // VTF_IO_EPISODE_IO_H_
