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

#include "planning/dijkstra.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>

namespace vtf::plan {

namespace {

struct QueueEntry {
  double cost;
  int index;
  bool operator>(const QueueEntry& o) const {
    if (cost != o.cost) return cost > o.cost;
    return index > o.index;
  }
};

}  // namespace

GridPath dijkstra_plan(const Costmap& cm, std::pair<int, int> start,
                       std::pair<int, int> goal) {
  if (!cm.in_grid(start.first, start.second) ||
      !cm.in_grid(goal.first, goal.second)) {
    throw std::invalid_argument("dijkstra: start or goal outside the grid");
  }
  if (!cm.passable(start.first, start.second) ||
      !cm.passable(goal.first, goal.second)) {
    throw std::invalid_argument("dijkstra: start or goal impassable");
  }
  const int n = cm.width * cm.height;
  const int start_i = start.second * cm.width + start.first;
  const int goal_i = goal.second * cm.width + goal.first;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(n, inf);
  std::vector<int> pred(n, -1);
  std::vector<char> settled(n, 0);
  std::priority_queue<QueueEntry, std::vector<QueueEntry>,
                      std::greater<QueueEntry>>
      frontier;
  dist[start_i] = 0.0;
  frontier.push({0.0, start_i});

  static constexpr int kDx[8] = {-1, -1, -1, 0, 0, 1, 1, 1};
  static constexpr int kDy[8] = {-1, 0, 1, -1, 1, -1, 0, 1};
  const double sqrt2 = std::sqrt(2.0);

  while (!frontier.empty()) {
    const QueueEntry top = frontier.top();
    frontier.pop();
    if (settled[top.index]) continue;
    settled[top.index] = 1;
    if (top.index == goal_i) break;
    const int ix = top.index % cm.width;
    const int iy = top.index / cm.width;
    const double here = cm.at(ix, iy);
    for (int k = 0; k < 8; ++k) {
      const int nx = ix + kDx[k];
      const int ny = iy + kDy[k];
      if (!cm.in_grid(nx, ny) || !cm.passable(nx, ny)) continue;
      const int ni = ny * cm.width + nx;
      if (settled[ni]) continue;
      const double len = (kDx[k] != 0 && kDy[k] != 0) ? sqrt2 : 1.0;
      const double cand = dist[top.index] + len * 0.5 * (here + cm.at(nx, ny));
      if (cand < dist[ni] ||
          (cand == dist[ni] && top.index < pred[ni])) {
        dist[ni] = cand;
        pred[ni] = top.index;
        frontier.push({cand, ni});
      }
    }
  }

  GridPath out;
  if (!std::isfinite(dist[goal_i])) return out;
  out.found = true;
  out.cost = dist[goal_i];
  for (int i = goal_i; i != -1; i = pred[i]) {
    out.cells.emplace_back(i % cm.width, i / cm.width);
  }
  std::reverse(out.cells.begin(), out.cells.end());
  return out;
}

}  // namespace vtf::plan
