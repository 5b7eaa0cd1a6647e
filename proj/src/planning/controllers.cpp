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

#include "planning/controllers.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace vtf::plan {

namespace {

// Point and tangent direction at arc length s along a polyline; s is clamped
// to [0, total length].
void polyline_at(const std::vector<sim::Vec2>& pts,
                 const std::vector<double>& cum, double s, sim::Vec2& point,
                 double& yaw) {
  const double total = cum.back();
  s = std::clamp(s, 0.0, total);
  std::size_t seg = 1;
  while (seg + 1 < cum.size() && cum[seg] < s) ++seg;
  const double len = cum[seg] - cum[seg - 1];
  const sim::Vec2& a = pts[seg - 1];
  const sim::Vec2& b = pts[seg];
  const double f = len > 0.0 ? (s - cum[seg - 1]) / len : 0.0;
  point = {a.x + f * (b.x - a.x), a.y + f * (b.y - a.y)};
  yaw = std::atan2(b.y - a.y, b.x - a.x);
}

geo::Action first_action(const ad::Tensor& actions) {
  const auto v = actions.data();
  return geo::clamp_action({v[0], v[1]});
}

}  // namespace

geo::Action random_action(Rng& rng) {
  return {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
}

geo::Action ikd_controller_step(const training::AnyModel& model,
                                const training::NormalizationStats& stats,
                                const HistoryBuffer& hist,
                                const std::vector<sim::Vec2>& path,
                                double spacing_m) {
  if (path.size() < 2) {
    throw std::invalid_argument("ikd controller: path needs >= 2 points");
  }
  if (spacing_m <= 0.0) {
    throw std::invalid_argument("ikd controller: spacing must be positive");
  }
  const int tau = model.config.horizon;
  const geo::Pose& cur = hist.current_pose();

  std::vector<double> cum(path.size(), 0.0);
  for (std::size_t i = 1; i < path.size(); ++i) {
    cum[i] =
        cum[i - 1] + std::hypot(path[i].x - path[i - 1].x,
                                path[i].y - path[i - 1].y);
  }
  // Arc position of the nearest path vertex (first one on ties).
  std::size_t nearest = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < path.size(); ++i) {
    const double d = std::hypot(path[i].x - cur.x, path[i].y - cur.y);
    if (d < best) {
      best = d;
      nearest = i;
    }
  }
  const double s0 = cum[nearest];
  if (s0 + spacing_m > cum.back()) return {0.0, 0.0};

  std::vector<double> fd(static_cast<std::size_t>(tau) * 6);
  geo::Pose prev = cur;
  for (int k = 0; k < tau; ++k) {
    sim::Vec2 pt;
    double yaw = 0.0;
    polyline_at(path, cum, s0 + (k + 1) * spacing_m, pt, yaw);
    geo::Pose desired;
    desired.x = pt.x;
    desired.y = pt.y;
    desired.z = cur.z;
    desired.yaw = yaw;
    const auto nd = stats.normalize_delta(geo::to_array(geo::relative(prev, desired)));
    for (int c = 0; c < 6; ++c) fd[static_cast<std::size_t>(k) * 6 + c] = nd[c];
    prev = desired;
  }

  training::Batch batch =
      history_batch(std::span<const HistoryBuffer>(&hist, 1), stats, tau,
                    model.config.dtype);
  batch.fut_deltas =
      ad::Tensor::from_data({1, tau, 6}, std::move(fd), model.config.dtype);
  return first_action(
      training::predict_actions(model, batch, model::Mode::ikd));
}

geo::Action bc_controller_step(const training::AnyModel& model,
                               const training::NormalizationStats& stats,
                               const HistoryBuffer& hist) {
  const training::Batch batch =
      history_batch(std::span<const HistoryBuffer>(&hist, 1), stats,
                    model.config.horizon, model.config.dtype);
  return first_action(training::predict_actions(model, batch, model::Mode::bc));
}

}  // namespace vtf::plan
