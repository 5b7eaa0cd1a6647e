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

#include "terrainsim/terrain.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace vtf::sim {

namespace {

// Smooth value noise: a coarse lattice of seeded uniform values interpolated
// with a smoothstep kernel (C1 across lattice lines).
class ValueNoise {
 public:
  ValueNoise(int lattice_w, int lattice_h, double amp, Rng& rng)
      : w_(lattice_w), h_(lattice_h), values_(lattice_w * lattice_h) {
    for (double& v : values_) v = rng.uniform(-amp, amp);
  }

  double sample(double u, double v) const {
    const int i0 = std::min(static_cast<int>(u), w_ - 2);
    const int j0 = std::min(static_cast<int>(v), h_ - 2);
    const double fu = smooth(u - i0);
    const double fv = smooth(v - j0);
    const double a = values_[j0 * w_ + i0];
    const double b = values_[j0 * w_ + i0 + 1];
    const double c = values_[(j0 + 1) * w_ + i0];
    const double d = values_[(j0 + 1) * w_ + i0 + 1];
    return (a * (1 - fu) + b * fu) * (1 - fv) + (c * (1 - fu) + d * fu) * fv;
  }

 private:
  static double smooth(double t) { return t * t * (3.0 - 2.0 * t); }
  int w_, h_;
  std::vector<double> values_;
};

constexpr int kNoiseLatticeCells = 8;  // lattice spacing in grid cells

}  // namespace

ElevationMap generate_terrain(std::uint64_t seed,
                              const TerrainParams& params) {
  if (params.bump_height_min < 0 || params.bump_radius_min <= 0 ||
      params.noise_amp < 0 || params.resolution <= 0) {
    throw std::invalid_argument("generate_terrain: ranges must be positive");
  }
  ElevationMap map;
  map.resolution = params.resolution;
  map.width_cells =
      static_cast<int>(std::round(params.world_x / params.resolution)) + 1;
  map.height_cells =
      static_cast<int>(std::round(params.world_y / params.resolution)) + 1;
  map.heights.assign(map.width_cells * map.height_cells, 0.0);

  Rng rng(seed);
  struct Bump {
    double cx, cy, h, sigma;
  };
  std::vector<Bump> bumps(params.n_bumps);
  for (Bump& b : bumps) {
    b.cx = rng.uniform(0.0, params.world_x);
    b.cy = rng.uniform(0.0, params.world_y);
    b.h = rng.uniform(params.bump_height_min, params.bump_height_max);
    b.sigma = rng.uniform(params.bump_radius_min, params.bump_radius_max);
  }
  const int lat_w = map.width_cells / kNoiseLatticeCells + 2;
  const int lat_h = map.height_cells / kNoiseLatticeCells + 2;
  ValueNoise noise(lat_w, lat_h, params.noise_amp, rng);

  for (int iy = 0; iy < map.height_cells; ++iy) {
    for (int ix = 0; ix < map.width_cells; ++ix) {
      const double x = ix * params.resolution;
      const double y = iy * params.resolution;
      double h = 0.0;
      for (const Bump& b : bumps) {
        const double dx = x - b.cx, dy = y - b.cy;
        h += b.h * std::exp(-(dx * dx + dy * dy) / (2.0 * b.sigma * b.sigma));
      }
      if (params.noise_amp > 0) {
        h += noise.sample(static_cast<double>(ix) / kNoiseLatticeCells,
                          static_cast<double>(iy) / kNoiseLatticeCells);
      }
      map.at(ix, iy) = h;
    }
  }

  const auto [lo, hi] =
      std::minmax_element(map.heights.begin(), map.heights.end());
  const double relief = *hi - *lo;
  if (relief > params.h_max && relief > 0) {
    const double scale = params.h_max / relief;
    for (double& h : map.heights) h *= scale;
  }
  return map;
}

double sample_elevation(const ElevationMap& map, double x, double y) {
  if (!map.in_bounds(x, y)) {
    throw std::out_of_range("sample_elevation: (" + std::to_string(x) + ", " +
                            std::to_string(y) + ") outside map");
  }
  const double gx = (x - map.origin_x) / map.resolution;
  const double gy = (y - map.origin_y) / map.resolution;
  int ix = std::min(static_cast<int>(gx), map.width_cells - 2);
  int iy = std::min(static_cast<int>(gy), map.height_cells - 2);
  const double fx = gx - ix;
  const double fy = gy - iy;
  const double a = map.at(ix, iy);
  const double b = map.at(ix + 1, iy);
  const double c = map.at(ix, iy + 1);
  const double d = map.at(ix + 1, iy + 1);
  return (a * (1 - fx) + b * fx) * (1 - fy) + (c * (1 - fx) + d * fx) * fy;
}

}  // namespace vtf::sim
