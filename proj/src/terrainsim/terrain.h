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

#ifndef VTF_TERRAINSIM_TERRAIN_H_
#define VTF_TERRAINSIM_TERRAIN_H_

#include <cstdint>
#include <vector>

#include "core/rng.h"

namespace vtf::sim {

// Regular-grid heightfield. Cell (ix, iy) is centered at world
// (origin_x + ix * resolution, origin_y + iy * resolution); heights are
// row-major by iy.
struct ElevationMap {
  int width_cells = 0;   // along x
  int height_cells = 0;  // along y
  double resolution = 0.05;
  double origin_x = 0.0;
  double origin_y = 0.0;
  std::vector<double> heights;

  double at(int ix, int iy) const { return heights[iy * width_cells + ix]; }
  double& at(int ix, int iy) { return heights[iy * width_cells + ix]; }

  double max_x() const { return origin_x + (width_cells - 1) * resolution; }
  double max_y() const { return origin_y + (height_cells - 1) * resolution; }
  bool in_bounds(double x, double y) const {
    return x >= origin_x && x <= max_x() && y >= origin_y && y <= max_y();
  }
};

struct TerrainParams {
  int n_bumps = 60;
  double bump_height_min = 0.02;
  double bump_height_max = 0.12;
  double bump_radius_min = 0.10;  // Gaussian sigma, meters
  double bump_radius_max = 0.35;
  double noise_amp = 0.02;  // smooth value-noise amplitude, meters
  double h_max = 0.25;      // cap on peak-to-trough relief, meters
  double world_x = 4.0;
  double world_y = 2.5;
  double resolution = 0.05;
};

// Sum of n_bumps Gaussian bumps at seeded random centers/heights/radii plus
// smooth value noise; the whole field is rescaled if its relief exceeds
// h_max. Deterministic per seed.
ElevationMap generate_terrain(std::uint64_t seed, const TerrainParams& params);

// Bilinear interpolation of the four surrounding cells. Throws if (x, y) is
// outside the map.
double sample_elevation(const ElevationMap& map, double x, double y);

}  // namespace vtf::sim

#endif  // VTF_TERRAINSIM_TERRAIN_H_
