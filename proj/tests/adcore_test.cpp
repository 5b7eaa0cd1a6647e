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
#include <vector>

#include "adcore/tensor.h"
#include "core/rng.h"

using namespace vtf;
using namespace vtf::ad;

namespace {

std::vector<double> values(const Tensor& t) {
  const auto s = t.data();
  return {s.begin(), s.end()};
}

}  // namespace

TEST_CASE("factories and shape accounting") {
  const Tensor z = Tensor::zeros({2, 3});
  CHECK(z.numel() == 6);
  CHECK(z.dim(0) == 2);
  CHECK(z.dim(-1) == 3);
  for (double v : z.data()) CHECK(v == 0.0);

  const Tensor f = Tensor::full({2}, 1.5);
  CHECK(values(f) == std::vector<double>{1.5, 1.5});

  CHECK_THROWS(Tensor::from_data({2, 2}, {1.0, 2.0, 3.0}));
}

TEST_CASE("elementwise hand values") {
  // softmax of [0, ln 3] puts exactly 1/4 and 3/4 of the mass.
  const Tensor sm =
      softmax(Tensor::from_data({2}, {0.0, std::log(3.0)}), -1);
  CHECK(values(sm)[0] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(values(sm)[1] == doctest::Approx(0.75).epsilon(1e-12));

  // erf-based gelu: gelu(1) = Phi(1) = 0.8413447460685429.
  CHECK(gelu(Tensor::scalar(1.0)).item() ==
        doctest::Approx(0.8413447460685429).epsilon(1e-14));
  CHECK(gelu(Tensor::scalar(0.0)).item() == 0.0);

  // rmsnorm over [3, 4]: rms = sqrt(12.5).
  const Tensor rn = rmsnorm(Tensor::from_data({2}, {3.0, 4.0}),
                            Tensor::from_data({2}, {1.0, 1.0}), 0.0);
  const double rms = std::sqrt(12.5);
  CHECK(values(rn)[0] == doctest::Approx(3.0 / rms).epsilon(1e-14));
  CHECK(values(rn)[1] == doctest::Approx(4.0 / rms).epsilon(1e-14));

  CHECK(tanh(Tensor::scalar(0.0)).item() == 0.0);
  CHECK(exp(Tensor::scalar(1.0)).item() ==
        doctest::Approx(std::numbers::e).epsilon(1e-15));
  CHECK(log(exp(Tensor::scalar(2.0))).item() ==
        doctest::Approx(2.0).epsilon(1e-14));
  CHECK(pow(Tensor::scalar(3.0), 2.0).item() == doctest::Approx(9.0));
}

TEST_CASE("matmul hand value and broadcasting add") {
  const Tensor a = Tensor::from_data({2, 2}, {1.0, 2.0, 3.0, 4.0});
  const Tensor b = Tensor::from_data({2, 2}, {5.0, 6.0, 7.0, 8.0});
  CHECK(values(matmul(a, b)) == std::vector<double>{19.0, 22.0, 43.0, 50.0});

  const Tensor x = Tensor::from_data({2, 3}, {1, 2, 3, 4, 5, 6});
  const Tensor row = Tensor::from_data({3}, {10, 20, 30});
  CHECK(values(add(x, row)) == std::vector<double>{11, 22, 33, 14, 25, 36});
}

TEST_CASE("structural ops hand values") {
  const Tensor x = Tensor::from_data({2, 3}, {1, 2, 3, 4, 5, 6});
  CHECK(values(transpose_last(x)) == std::vector<double>{1, 4, 2, 5, 3, 6});
  CHECK(values(slice(x, 1, 1, 2)) == std::vector<double>{2, 3, 5, 6});
  CHECK(values(concat({x, x}, -1)) ==
        std::vector<double>{1, 2, 3, 1, 2, 3, 4, 5, 6, 4, 5, 6});
  CHECK(values(reshape(x, {3, 2})) == std::vector<double>{1, 2, 3, 4, 5, 6});
  CHECK(sum_all(x).item() == 21.0);
  CHECK(mean_all(x).item() == 3.5);
  CHECK(values(sum_axis(x, 0)) == std::vector<double>{5, 7, 9});
  CHECK(values(mean_axis(x, 1)) == std::vector<double>{2, 5});
}

TEST_CASE("conv2d hand value: ones kernel counts the padded overlap") {
  const Tensor img = Tensor::full({1, 1, 5, 5}, 1.0);
  const Tensor w = Tensor::full({1, 1, 3, 3}, 1.0);
  const Tensor bias = Tensor::zeros({1});
  const Tensor y = conv2d(img, w, bias, 2, 1);
  CHECK(y.dim(2) == 3);
  CHECK(y.dim(3) == 3);
  CHECK(values(y) == std::vector<double>{4, 6, 4, 6, 9, 6, 4, 6, 4});
}

TEST_CASE("mean backward distributes 1/n") {
  Tensor x = Tensor::from_data({2}, {1.0, 5.0});
  x.set_requires_grad(true);
  mean_all(x).backward();
  CHECK(x.grad()[0] == 0.5);
  CHECK(x.grad()[1] == 0.5);
}

TEST_CASE("gradient check on a composite expression") {
  Rng rng(7);
  const Tensor g = Tensor::from_data({4}, {1.1, 0.9, 1.0, 1.2});
  const Tensor w = Tensor::randn({4, 4}, rng, 0.5);
  const Tensor x0 = Tensor::randn({2, 3, 4}, rng, 1.0);
  auto f = [&](const Tensor& x) {
    const Tensor h = rmsnorm(x, g, 1e-6);
    const Tensor a = matmul(h, w);
    const Tensor s = softmax(matmul(x, w), -1);
    return mean_all(mul(gelu(a), s));
  };
  CHECK(grad_check(f, x0, 1e-5) < 1e-6);

  // Structural round trip: conv -> reshape -> transpose -> slice -> concat.
  const Tensor cw = Tensor::randn({2, 1, 3, 3}, rng, 0.3);
  const Tensor cb = Tensor::from_data({2}, {0.1, -0.2});
  const Tensor xc = Tensor::randn({1, 1, 5, 5}, rng, 1.0);
  auto fc = [&](const Tensor& x) {
    const Tensor y = conv2d(x, cw, cb, 2, 1);
    const Tensor t = transpose_last(reshape(y, {2, 3, 3}));
    const Tensor s1 = slice(t, 0, 0, 1);
    const Tensor s2 = slice(t, 0, 1, 1);
    return sum_all(scalar_mul(concat({s1, s2, s1}, -1), 0.5));
  };
  CHECK(grad_check(fc, xc, 1e-5) < 1e-6);

  auto fw = [&](const Tensor& ww) { return mean_all(tanh(matmul(x0, ww))); };
  CHECK(grad_check(fw, w, 1e-5) < 1e-6);
}

TEST_CASE("grad_check flags a wrong gradient") {
  // mul(detach(x), x) backpropagates x instead of 2x; the checker must see
  // a large relative error, or it could never certify anything.
  Rng rng(3);
  const Tensor x0 = Tensor::randn({4}, rng, 1.0);
  auto broken = [](const Tensor& x) { return sum_all(mul(x.detach(), x)); };
  CHECK(grad_check(broken, x0, 1e-5) > 0.1);
}

TEST_CASE("NoGradGuard severs the tape") {
  Tensor x = Tensor::from_data({2}, {1.0, 2.0});
  x.set_requires_grad(true);
  Tensor y;
  {
    NoGradGuard guard;
    y = mul(x, x);
  }
  CHECK(!y.requires_grad());
}

TEST_CASE("f32 storage rounds through float") {
  const Tensor t = Tensor::from_data({1}, {0.1}, DType::f32);
  CHECK(t.data()[0] == static_cast<double>(static_cast<float>(0.1)));
  const Tensor d = Tensor::from_data({1}, {0.1}, DType::f64);
  CHECK(d.data()[0] == 0.1);
}

TEST_CASE("rng: deterministic, bounded, fork-independent") {
  Rng a(42);
  Rng b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.uniform() == b.uniform());

  Rng c(7);
  for (int i = 0; i < 1000; ++i) {
    const double u = c.uniform(-2.0, 3.0);
    CHECK(u >= -2.0);
    CHECK(u < 3.0);
    CHECK(c.uniform_index(5) < 5);
  }

  // fork(k) streams differ from the parent and from each other, and forking
  // does not disturb the parent's own sequence.
  Rng p(9);
  Rng p_untouched(9);
  Rng f1 = p.fork(1);
  Rng f2 = p.fork(2);
  CHECK(p.uniform() == p_untouched.uniform());
  CHECK(f1.uniform() != f2.uniform());
  CHECK(p.fork(1).uniform() == p_untouched.fork(1).uniform());

  // normal() has roughly zero mean and unit variance over many draws.
  Rng n(11);
  double sum = 0.0, sq = 0.0;
  const int kDraws = 20000;
  for (int i = 0; i < kDraws; ++i) {
    const double v = n.normal();
    sum += v;
    sq += v * v;
  }
  CHECK(std::abs(sum / kDraws) < 0.03);
  CHECK(std::abs(sq / kDraws - 1.0) < 0.05);
}
