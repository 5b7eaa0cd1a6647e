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

#ifndef VTF_PLANNING_COSTMAP_H_
#define VTF_PLANNING_COSTMAP_H_

#include <cmath>
#include <utility>
#include <vector>

#include "terrainsim/sim.h"
#include "terrainsim/terrain.h"

namespace vtf::plan {

// Cost multiplier per unit of elevation-gradient magnitude.
inline constexpr double kCostmapGradGain = 4.0;
// Gradient magnitude beyond which a cell is impassable; matches the slope at
// which the vehicle stalls.
inline constexpr double kCostmapGradLimit = 0.5;

// Per-cell traversal cost on the elevation map's grid. Finite cost >= 1;
// +infinity marks impassable cells. Row-major by iy, like ElevationMap.
struct Costmap {
  int width = 0;   // cells along x
  int height = 0;  // cells along y
  double resolution = 0.05;
  double origin_x = 0.0;
  double origin_y = 0.0;
  std::vector<double> cost;

  double at(int ix, int iy) const { return cost[iy * width + ix]; }
  bool in_grid(int ix, int iy) const {
    return ix >= 0 && ix < width && iy >= 0 && iy < height;
  }
  bool passable(int ix, int iy) const { return std::isfinite(at(ix, iy)); }

  // Nearest cell to a world position, clamped to the grid.
  std::pair<int, int> cell_of(double x, double y) const;
  sim::Vec2 center_of(int ix, int iy) const {
    return {origin_x + ix * resolution, origin_y + iy * resolution};
  }
};

// cost = 1 + k_grad * ||finite-difference elevation gradient||, central
// differences inside and one-sided at the borders; cells whose gradient
// magnitude exceeds grad_limit become +infinity. A flat map costs uniformly 1.
Costmap traversability_costmap(const sim::ElevationMap& map,
                               double k_grad = kCostmapGradGain,
                               double grad_limit = kCostmapGradLimit);

}  // namespace vtf::plan

#endif  // VTF_PLANNING_COSTMAP_H_
