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

#include "planning/costmap.h"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace vtf::plan {

std::pair<int, int> Costmap::cell_of(double x, double y) const {
  const int ix = static_cast<int>(std::llround((x - origin_x) / resolution));
  const int iy = static_cast<int>(std::llround((y - origin_y) / resolution));
  return {std::clamp(ix, 0, width - 1), std::clamp(iy, 0, height - 1)};
}

Costmap traversability_costmap(const sim::ElevationMap& map, double k_grad,
                               double grad_limit) {
  if (map.width_cells < 2 || map.height_cells < 2) {
    throw std::invalid_argument("costmap: map needs at least 2x2 cells");
  }
  if (k_grad < 0.0 || grad_limit <= 0.0) {
    throw std::invalid_argument("costmap: k_grad >= 0 and grad_limit > 0");
  }
  Costmap cm;
  cm.width = map.width_cells;
  cm.height = map.height_cells;
  cm.resolution = map.resolution;
  cm.origin_x = map.origin_x;
  cm.origin_y = map.origin_y;
  cm.cost.resize(static_cast<std::size_t>(cm.width) * cm.height);
  const double inf = std::numeric_limits<double>::infinity();
  for (int iy = 0; iy < cm.height; ++iy) {
    for (int ix = 0; ix < cm.width; ++ix) {
      const int xl = std::max(ix - 1, 0);
      const int xr = std::min(ix + 1, cm.width - 1);
      const int yl = std::max(iy - 1, 0);
      const int yr = std::min(iy + 1, cm.height - 1);
      const double gx =
          (map.at(xr, iy) - map.at(xl, iy)) / ((xr - xl) * map.resolution);
      const double gy =
          (map.at(ix, yr) - map.at(ix, yl)) / ((yr - yl) * map.resolution);
      const double g = std::hypot(gx, gy);
      cm.cost[iy * cm.width + ix] = g > grad_limit ? inf : 1.0 + k_grad * g;
    }
  }
  return cm;
}

}  // namespace vtf::plan
