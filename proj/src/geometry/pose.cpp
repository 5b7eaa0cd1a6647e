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

#include "geometry/pose.h"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace vtf::geo {

namespace {

constexpr double kPi = std::numbers::pi;

// c = a * b, all row-major 3x3.
std::array<double, 9> matmul3(const std::array<double, 9>& a,
                              const std::array<double, 9>& b) {
  std::array<double, 9> c{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) c[i * 3 + j] += a[i * 3 + k] * b[k * 3 + j];
  return c;
}

}  // namespace

double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * kPi;
  a = std::fmod(a, two_pi);
  if (a <= -kPi) {
    a += two_pi;
  } else if (a > kPi) {
    a -= two_pi;
  }
  return a;
}

std::array<double, 9> rotation_matrix(double roll, double pitch, double yaw) {
  const double cr = std::cos(roll), sr = std::sin(roll);
  const double cp = std::cos(pitch), sp = std::sin(pitch);
  const double cy = std::cos(yaw), sy = std::sin(yaw);
  // Rz(yaw) * Ry(pitch) * Rx(roll), expanded.
  return {cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr,
          sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr,
          -sp,     cp * sr,                cp * cr};
}

void euler_from_matrix(const std::array<double, 9>& r, double& roll,
                       double& pitch, double& yaw) {
  const double sp = std::clamp(-r[6], -1.0, 1.0);
  pitch = std::asin(sp);
  if (std::abs(sp) > 1.0 - 1e-12) {
    // Gimbal lock: only yaw - sign(sp)*roll is observable; report it as yaw.
    roll = 0.0;
    yaw = std::atan2(-r[1], r[4]);
  } else {
    roll = std::atan2(r[7], r[8]);
    yaw = std::atan2(r[3], r[0]);
  }
  roll = wrap_angle(roll);
  pitch = wrap_angle(pitch);
  yaw = wrap_angle(yaw);
}

Pose compose(const Pose& base, const PoseDelta& delta) {
  const auto rb = rotation_matrix(base.roll, base.pitch, base.yaw);
  const auto rd = rotation_matrix(delta.roll, delta.pitch, delta.yaw);
  Pose out;
  out.x = base.x + rb[0] * delta.x + rb[1] * delta.y + rb[2] * delta.z;
  out.y = base.y + rb[3] * delta.x + rb[4] * delta.y + rb[5] * delta.z;
  out.z = base.z + rb[6] * delta.x + rb[7] * delta.y + rb[8] * delta.z;
  euler_from_matrix(matmul3(rb, rd), out.roll, out.pitch, out.yaw);
  return out;
}

PoseDelta relative(const Pose& base, const Pose& target) {
  const auto rb = rotation_matrix(base.roll, base.pitch, base.yaw);
  const auto rt = rotation_matrix(target.roll, target.pitch, target.yaw);
  const double dx = target.x - base.x;
  const double dy = target.y - base.y;
  const double dz = target.z - base.z;
  PoseDelta out;
  // R_base^T * d
  out.x = rb[0] * dx + rb[3] * dy + rb[6] * dz;
  out.y = rb[1] * dx + rb[4] * dy + rb[7] * dz;
  out.z = rb[2] * dx + rb[5] * dy + rb[8] * dz;
  // R_base^T * R_target
  const std::array<double, 9> rbt = {rb[0], rb[3], rb[6], rb[1], rb[4],
                                     rb[7], rb[2], rb[5], rb[8]};
  euler_from_matrix(matmul3(rbt, rt), out.roll, out.pitch, out.yaw);
  return out;
}

Action clamp_action(const Action& a) {
  return {std::clamp(a.throttle, -1.0, 1.0), std::clamp(a.steering, -1.0, 1.0)};
}

std::array<double, 6> to_array(const Pose& p) {
  return {p.x, p.y, p.z, p.roll, p.pitch, p.yaw};
}

Pose pose_from_array(const std::array<double, 6>& a) {
  return Pose{a[0], a[1], a[2], a[3], a[4], a[5]};
}

}  // namespace vtf::geo
