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

#ifndef VTF_GEOMETRY_POSE_H_
#define VTF_GEOMETRY_POSE_H_

#include <array>

namespace vtf::geo {

// 6-DoF pose in a z-up right-handed world frame. Angles are intrinsic ZYX
// Euler (R = Rz(yaw) * Ry(pitch) * Rx(roll)), radians, wrapped to (-pi, pi].
struct Pose {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double roll = 0.0;
  double pitch = 0.0;
  double yaw = 0.0;
};

// A pose expressed in the body frame of some reference pose; same layout.
using PoseDelta = Pose;

// Normalized drive command; both components live in [-1, 1] at every
// interface.
struct Action {
  double throttle = 0.0;
  double steering = 0.0;
};

Action clamp_action(const Action& a);

// Wraps an angle to (-pi, pi].
double wrap_angle(double a);

// Row-major 3x3 rotation matrix for ZYX Euler angles.
std::array<double, 9> rotation_matrix(double roll, double pitch, double yaw);

// Euler angles recovered from a row-major rotation matrix. Pitch is clamped
// to the asin domain; at the gimbal singularity (|pitch| = pi/2) roll is
// folded into yaw.
void euler_from_matrix(const std::array<double, 9>& r, double& roll,
                       double& pitch, double& yaw);

// Applies `delta` (expressed in base's body frame) to `base`.
Pose compose(const Pose& base, const PoseDelta& delta);

// Expresses `target` in base's body frame; inverse of compose:
// compose(base, relative(base, target)) == target.
PoseDelta relative(const Pose& base, const Pose& target);

std::array<double, 6> to_array(const Pose& p);
Pose pose_from_array(const std::array<double, 6>& a);

}  // namespace vtf::geo

#endif  // VTF_GEOMETRY_POSE_H_
