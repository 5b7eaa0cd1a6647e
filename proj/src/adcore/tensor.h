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

#ifndef VTF_ADCORE_TENSOR_H_
#define VTF_ADCORE_TENSOR_H_

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "core/rng.h"

namespace vtf::ad {

// f32 keeps every stored value exactly representable in single precision
// (results are rounded through float after each op and serialized as 4-byte
// floats); arithmetic itself runs in double.
enum class DType { f64, f32 };

using Shape = std::vector<std::int64_t>;

std::string shape_str(const Shape& s);
std::int64_t numel_of(const Shape& s);

// Dense tensor participating in a reverse-mode graph. Value-semantics handle
// to a shared node; copies alias the same storage. Ops record backward
// closures onto result nodes whenever an input requires grad and no
// NoGradGuard is active.
class Tensor {
 public:
  struct Node;

  Tensor() = default;

  static Tensor zeros(Shape shape, DType dtype = DType::f64);
  static Tensor full(Shape shape, double value, DType dtype = DType::f64);
  static Tensor from_data(Shape shape, std::vector<double> values,
                          DType dtype = DType::f64);
  static Tensor scalar(double value, DType dtype = DType::f64);
  static Tensor randn(Shape shape, Rng& rng, double stddev = 1.0,
                      DType dtype = DType::f64);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::int64_t numel() const;
  std::int64_t dim(int axis) const;  // negative axis counts from the back
  int ndim() const;
  DType dtype() const;

  std::span<const double> data() const;
  std::span<double> mutable_data();  // leaf tensors only
  double item() const;               // single-element tensors only

  bool requires_grad() const;
  Tensor& set_requires_grad(bool value);

  // Gradient accumulated by backward(); empty span until first accumulation.
  std::span<const double> grad() const;
  Tensor grad_tensor() const;
  void zero_grad();

  // Same values, detached from the graph, never requires grad.
  Tensor detach() const;

  // Reverse-mode sweep from a scalar. Gradients sum into every reachable
  // tensor with requires_grad=true; caller zeroes between steps.
  void backward() const;

  bool same_node(const Tensor& other) const { return node_ == other.node_; }

  // Internal: used by op implementations.
  static Tensor make_result(Shape shape, std::vector<double> values,
                            DType dtype, const char* op,
                            std::vector<Tensor> inputs,
                            std::function<void(Node&)> backward_fn);
  Node* node() const { return node_.get(); }

 private:
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}
  std::shared_ptr<Node> node_;
};

struct Tensor::Node {
  Shape shape;
  std::vector<double> data;
  DType dtype = DType::f64;
  bool requires_grad = false;
  std::vector<double> grad;  // lazily sized on first accumulation
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;

  std::span<double> ensure_grad();
};

// Disables graph recording within scope; forwards become plain evaluation.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;
  static bool active();

 private:
  bool prev_;
};

// ---- Op suite ----
// Elementwise ops broadcast over leading batch dims only: shapes must be
// equal, or one operand's shape must be a trailing suffix of the other's.

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scalar_mul(const Tensor& a, double s);
Tensor scalar_add(const Tensor& a, double s);

// a: [..., m, k]. b: [k, n] (shared weight) or [..., k, n] with identical
// leading dims.
Tensor matmul(const Tensor& a, const Tensor& b);

Tensor concat(const std::vector<Tensor>& parts, int axis = -1);
Tensor slice(const Tensor& x, int axis, std::int64_t start, std::int64_t len);
Tensor transpose_last(const Tensor& x);
Tensor reshape(const Tensor& x, Shape shape);
// Prepends/repeats leading dims; x.shape must be a trailing suffix of target.
Tensor broadcast_to(const Tensor& x, Shape target);

Tensor sum_all(const Tensor& x);
Tensor mean_all(const Tensor& x);
Tensor sum_axis(const Tensor& x, int axis);
Tensor mean_axis(const Tensor& x, int axis);

Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);
Tensor sqrt(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor pow(const Tensor& x, double exponent);

// Stable softmax along axis (max-subtraction).
Tensor softmax(const Tensor& x, int axis = -1);

// Exact-erf variant: x * Phi(x).
Tensor gelu(const Tensor& x);

// y_i = gain_i * x_i / sqrt(mean_j x_j^2 + eps) over the last dim.
Tensor rmsnorm(const Tensor& x, const Tensor& gain, double eps);

// Training: zero with probability rate, scale survivors by 1/(1-rate).
Tensor dropout(const Tensor& x, double rate, bool training, Rng& rng);

// x: [N, Cin, H, W], w: [Cout, Cin, kh, kw], b: [Cout].
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride,
              int pad);

// Max over coordinates of |analytic - numeric| / max(1, |a|, |n|), numeric by
// central differences. f must be scalar-valued.
double grad_check(const std::function<Tensor(const Tensor&)>& f,
                  const Tensor& x, double eps);

}  // namespace vtf::ad

#endif  // VTF_ADCORE_TENSOR_H_
