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

#ifndef VTF_PLANNING_DIJKSTRA_H_
#define VTF_PLANNING_DIJKSTRA_H_

#include <utility>
#include <vector>

#include "planning/costmap.h"

namespace vtf::plan {

// Result of a grid search: the cell sequence from start to goal inclusive and
// its total cost. found=false (empty cells, infinite cost) when the goal is
// unreachable.
struct GridPath {
  bool found = false;
  std::vector<std::pair<int, int>> cells;  // (ix, iy), start first
  double cost = 0.0;
};

// Min-cost path on the 8-connected grid. Edge weight = step length in cells
// (1 or sqrt 2) times the mean of the two endpoint cell costs; edges into
// impassable cells are not taken. Deterministic: the frontier is ordered by
// (cost, linear cell index) and equal-cost relaxations keep the predecessor
// with the smaller linear index. Throws std::invalid_argument when start or
// goal is outside the grid or impassable.
GridPath dijkstra_plan(const Costmap& cm, std::pair<int, int> start,
                       std::pair<int, int> goal);

}  // namespace vtf::plan

#endif  // VTF_PLANNING_DIJKSTRA_H_
