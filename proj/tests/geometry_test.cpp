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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>

#include "core/rng.h"
#include "geometry/pose.h"

using namespace vtf;
using namespace vtf::geo;

namespace {

constexpr double kPi = std::numbers::pi;

Pose random_pose(Rng& rng) {
  Pose p;
  p.x = rng.uniform(-5.0, 5.0);
  p.y = rng.uniform(-5.0, 5.0);
  p.z = rng.uniform(-1.0, 1.0);
  p.roll = rng.uniform(-1.2, 1.2);
  p.pitch = rng.uniform(-1.2, 1.2);
  p.yaw = rng.uniform(-kPi, kPi);
  return p;
}

void check_close(const Pose& a, const Pose& b, double tol) {
  CHECK(std::abs(a.x - b.x) < tol);
  CHECK(std::abs(a.y - b.y) < tol);
  CHECK(std::abs(a.z - b.z) < tol);
  CHECK(std::abs(wrap_angle(a.roll - b.roll)) < tol);
  CHECK(std::abs(wrap_angle(a.pitch - b.pitch)) < tol);
  CHECK(std::abs(wrap_angle(a.yaw - b.yaw)) < tol);
}

}  // namespace

TEST_CASE("wrap_angle maps into (-pi, pi]") {
  CHECK(wrap_angle(0.0) == 0.0);
  CHECK(wrap_angle(kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(-kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(3.0 * kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(2.0 * kPi) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(wrap_angle(kPi + 0.1) == doctest::Approx(-kPi + 0.1));
  CHECK(wrap_angle(-kPi - 0.1) == doctest::Approx(kPi - 0.1));
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    const double w = wrap_angle(rng.uniform(-50.0, 50.0));
    CHECK(w > -kPi - 1e-15);
    CHECK(w <= kPi + 1e-15);
  }
}

TEST_CASE("rotation matrix basics") {
  // Identity at zero angles.
  const auto eye = rotation_matrix(0.0, 0.0, 0.0);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c)
      CHECK(eye[3 * r + c] == doctest::Approx(r == c ? 1.0 : 0.0));

  // Pure yaw of pi/2 sends +x to +y.
  const auto yaw90 = rotation_matrix(0.0, 0.0, kPi / 2.0);
  CHECK(yaw90[0] == doctest::Approx(0.0));
  CHECK(yaw90[3] == doctest::Approx(1.0));   // y component of rotated x
  CHECK(yaw90[1] == doctest::Approx(-1.0));  // x component of rotated y

  // Orthonormality: R * R^T = I for random angles.
  Rng rng(17);
  for (int t = 0; t < 50; ++t) {
    const auto R = rotation_matrix(rng.uniform(-1.5, 1.5),
                                   rng.uniform(-1.5, 1.5),
                                   rng.uniform(-kPi, kPi));
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) {
        double dot = 0.0;
        for (int k = 0; k < 3; ++k) dot += R[3 * r + k] * R[3 * c + k];
        CHECK(dot == doctest::Approx(r == c ? 1.0 : 0.0).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("euler_from_matrix inverts rotation_matrix away from gimbal lock") {
  Rng rng(23);
  for (int t = 0; t < 200; ++t) {
    const double roll = rng.uniform(-1.4, 1.4);
    const double pitch = rng.uniform(-1.4, 1.4);
    const double yaw = rng.uniform(-kPi, kPi);
    const auto R = rotation_matrix(roll, pitch, yaw);
    double r2, p2, y2;
    euler_from_matrix(R, r2, p2, y2);
    CHECK(std::abs(wrap_angle(r2 - roll)) < 1e-9);
    CHECK(std::abs(p2 - pitch) < 1e-9);
    CHECK(std::abs(wrap_angle(y2 - yaw)) < 1e-9);
  }
}

TEST_CASE("compose identity and translation hand values") {
  const Pose base{1.0, 2.0, 0.5, 0.0, 0.0, kPi / 2.0};
  // A pure +x body step from a yaw of pi/2 moves the world +y.
  const Pose delta{1.0, 0.0, 0.0, 0.0, 0.0, 0.0};
  const Pose out = compose(base, delta);
  CHECK(out.x == doctest::Approx(1.0));
  CHECK(out.y == doctest::Approx(3.0));
  CHECK(out.z == doctest::Approx(0.5));
  CHECK(out.yaw == doctest::Approx(kPi / 2.0));

  const Pose zero{};
  const Pose same = compose(base, zero);
  check_close(same, base, 1e-12);
}

TEST_CASE("relative is the exact inverse of compose") {
  Rng rng(31);
  for (int t = 0; t < 300; ++t) {
    const Pose base = random_pose(rng);
    const Pose target = random_pose(rng);
    const Pose delta = relative(base, target);
    const Pose back = compose(base, delta);
    check_close(back, target, 1e-9);

    // And the delta of a pose against itself is null.
    const Pose self = relative(base, base);
    CHECK(std::abs(self.x) < 1e-12);
    CHECK(std::abs(self.y) < 1e-12);
    CHECK(std::abs(self.z) < 1e-12);
    CHECK(std::abs(self.roll) < 1e-9);
    CHECK(std::abs(self.pitch) < 1e-9);
    CHECK(std::abs(self.yaw) < 1e-9);
  }
}

TEST_CASE("pose array round trip and action clamp") {
  const Pose p{0.1, -0.2, 0.3, 0.4, -0.5, 0.6};
  const auto arr = to_array(p);
  const Pose q = pose_from_array(arr);
  check_close(p, q, 0.0 + 1e-15);

  const Action a = clamp_action({2.0, -3.0});
  CHECK(a.throttle == 1.0);
  CHECK(a.steering == -1.0);
  const Action b = clamp_action({0.5, 0.25});
  CHECK(b.throttle == 0.5);
  CHECK(b.steering == 0.25);
}
