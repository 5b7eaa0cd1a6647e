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

#ifndef VTF_PLANNING_CONTROLLERS_H_
#define VTF_PLANNING_CONTROLLERS_H_

#include <vector>

#include "core/rng.h"
#include "geometry/pose.h"
#include "planning/mppi.h"
#include "terrainsim/sim.h"
#include "training/trainer.h"

namespace vtf::plan {

// Uniform action in [-1, 1]^2: the no-model floor every learned controller
// has to beat.
geo::Action random_action(Rng& rng);

// Global-path tracker driven by the model's inverse mode. Projects the
// current position onto the path polyline, picks `horizon` desired poses
// spaced spacing_m of arc length ahead (yaw along the path tangent, height
// carried from the current pose), converts them to per-step body-frame
// deltas, asks the model for the matching action sequence, and returns the
// first action; the caller replans every tick. Returns the zero (stop) action
// once the remaining path is shorter than one spacing.
geo::Action ikd_controller_step(const training::AnyModel& model,
                                const training::NormalizationStats& stats,
                                const HistoryBuffer& hist,
                                const std::vector<sim::Vec2>& path,
                                double spacing_m);

// Behavior-cloning step: both future slots stay masked, the model proposes
// the action sequence from history alone, and the first action is executed.
geo::Action bc_controller_step(const training::AnyModel& model,
                               const training::NormalizationStats& stats,
                               const HistoryBuffer& hist);

}  // namespace vtf::plan

#endif  // VTF_PLANNING_CONTROLLERS_H_
