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

#include "adcore/tensor.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace vtf::ad {

namespace {

thread_local bool g_no_grad = false;

void check(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

void quantize_f32(std::vector<double>& v) {
  for (double& x : v) x = static_cast<double>(static_cast<float>(x));
}

void check_finite(const std::vector<double>& v, const char* op) {
  for (double x : v) {
    if (!std::isfinite(x)) {
      throw std::runtime_error(std::string(op) + ": non-finite result");
    }
  }
}

DType result_dtype(std::initializer_list<const Tensor*> inputs) {
  for (const Tensor* t : inputs) {
    if (t->dtype() == DType::f64) return DType::f64;
  }
  return DType::f32;
}

int normalize_axis(int axis, int ndim, const char* op) {
  if (axis < 0) axis += ndim;
  check(axis >= 0 && axis < ndim,
        std::string(op) + ": axis out of range for rank " +
            std::to_string(ndim));
  return axis;
}

// True if `small` equals the trailing dims of `big`.
bool is_suffix(const Shape& small, const Shape& big) {
  if (small.size() > big.size()) return false;
  return std::equal(small.rbegin(), small.rend(), big.rbegin());
}

struct ReduceDims {
  std::int64_t outer, n, inner;
};

ReduceDims reduce_dims(const Shape& shape, int axis) {
  ReduceDims d{1, shape[axis], 1};
  for (int i = 0; i < axis; ++i) d.outer *= shape[i];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) d.inner *= shape[i];
  return d;
}

}  // namespace

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) os << ',';
    os << s[i];
  }
  os << ']';
  return os.str();
}

std::int64_t numel_of(const Shape& s) {
  std::int64_t n = 1;
  for (auto d : s) n *= d;
  return n;
}

std::span<double> Tensor::Node::ensure_grad() {
  if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
  return grad;
}

NoGradGuard::NoGradGuard() : prev_(g_no_grad) { g_no_grad = true; }
NoGradGuard::~NoGradGuard() { g_no_grad = prev_; }
bool NoGradGuard::active() { return g_no_grad; }

// ---- Tensor basics ----

Tensor Tensor::zeros(Shape shape, DType dtype) {
  return from_data(shape, std::vector<double>(numel_of(shape), 0.0), dtype);
}

Tensor Tensor::full(Shape shape, double value, DType dtype) {
  return from_data(shape, std::vector<double>(numel_of(shape), value), dtype);
}

Tensor Tensor::from_data(Shape shape, std::vector<double> values,
                         DType dtype) {
  check(numel_of(shape) == static_cast<std::int64_t>(values.size()),
        "from_data: shape " + shape_str(shape) + " expects " +
            std::to_string(numel_of(shape)) + " values, got " +
            std::to_string(values.size()));
  if (dtype == DType::f32) quantize_f32(values);
  check_finite(values, "from_data");
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->data = std::move(values);
  node->dtype = dtype;
  return Tensor(std::move(node));
}

Tensor Tensor::scalar(double value, DType dtype) {
  return from_data({}, {value}, dtype);
}

Tensor Tensor::randn(Shape shape, Rng& rng, double stddev, DType dtype) {
  std::vector<double> v(numel_of(shape));
  for (double& x : v) x = rng.normal(0.0, stddev);
  return from_data(std::move(shape), std::move(v), dtype);
}

const Shape& Tensor::shape() const { return node_->shape; }
std::int64_t Tensor::numel() const {
  return static_cast<std::int64_t>(node_->data.size());
}
int Tensor::ndim() const { return static_cast<int>(node_->shape.size()); }

std::int64_t Tensor::dim(int axis) const {
  return node_->shape[normalize_axis(axis, ndim(), "dim")];
}

DType Tensor::dtype() const { return node_->dtype; }

std::span<const double> Tensor::data() const { return node_->data; }

std::span<double> Tensor::mutable_data() {
  check(!node_->backward_fn, "mutable_data: only leaf tensors are mutable");
  return node_->data;
}

double Tensor::item() const {
  check(numel() == 1, "item: tensor has " + std::to_string(numel()) +
                          " elements, expected 1");
  return node_->data[0];
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

Tensor& Tensor::set_requires_grad(bool value) {
  check(!value || !node_->backward_fn,
        "set_requires_grad: cannot mark a non-leaf tensor");
  node_->requires_grad = value;
  return *this;
}

std::span<const double> Tensor::grad() const { return node_->grad; }

Tensor Tensor::grad_tensor() const {
  if (node_->grad.empty()) return zeros(node_->shape, node_->dtype);
  return from_data(node_->shape, node_->grad, node_->dtype);
}

void Tensor::zero_grad() { node_->grad.clear(); }

Tensor Tensor::detach() const {
  return from_data(node_->shape, node_->data, node_->dtype);
}

Tensor Tensor::make_result(Shape shape, std::vector<double> values,
                           DType dtype, const char* op,
                           std::vector<Tensor> inputs,
                           std::function<void(Node&)> backward_fn) {
  if (dtype == DType::f32) quantize_f32(values);
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->data = std::move(values);
  node->dtype = dtype;
  (void)op;
  if (!g_no_grad) {
    bool needs_grad = false;
    for (const Tensor& t : inputs) needs_grad = needs_grad || t.requires_grad();
    if (needs_grad) {
      node->requires_grad = true;
      node->parents.reserve(inputs.size());
      for (const Tensor& t : inputs) node->parents.push_back(t.node_);
      node->backward_fn = std::move(backward_fn);
    }
  }
  return Tensor(std::move(node));
}

void Tensor::backward() const {
  check(node_ != nullptr, "backward: undefined tensor");
  check(numel() == 1, "backward: loss must be scalar, got shape " +
                          shape_str(node_->shape));
  // Reverse topological order, iteratively; traversal order depends only on
  // graph structure so repeated runs are bit-identical.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  struct Frame {
    Node* node;
    std::size_t next_parent;
  };
  std::vector<Frame> stack;
  if (visited.insert(node_.get()).second) stack.push_back({node_.get(), 0});
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next_parent < f.node->parents.size()) {
      Node* p = f.node->parents[f.next_parent++].get();
      if (visited.insert(p).second) stack.push_back({p, 0});
    } else {
      order.push_back(f.node);
      stack.pop_back();
    }
  }
  node_->ensure_grad()[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward_fn && !n->grad.empty()) n->backward_fn(*n);
  }
}

// ---- Elementwise binary with leading-dim broadcast ----

namespace {

// Accumulates `src` (shape of the larger operand) into `dst` belonging to the
// smaller, suffix-shaped operand by summing over the tiled leading dims.
void reduce_into_suffix(std::span<double> dst, const std::vector<double>& src) {
  const std::size_t small_n = dst.size();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i % small_n] += src[i];
}

template <typename Fwd, typename BwdA, typename BwdB>
Tensor elementwise_binary(const Tensor& a, const Tensor& b, const char* op,
                          Fwd fwd, BwdA dfda, BwdB dfdb) {
  const bool a_big = is_suffix(b.shape(), a.shape());
  const bool b_big = is_suffix(a.shape(), b.shape());
  check(a_big || b_big, std::string(op) + ": shapes " + shape_str(a.shape()) +
                            " and " + shape_str(b.shape()) +
                            " are not equal or leading-broadcastable");
  const Tensor& big = a_big ? a : b;
  const std::int64_t n = big.numel();
  const std::int64_t na = a.numel();
  const std::int64_t nb = b.numel();
  std::vector<double> out(n);
  {
    auto pa = a.data();
    auto pb = b.data();
    for (std::int64_t i = 0; i < n; ++i) out[i] = fwd(pa[i % na], pb[i % nb]);
  }
  check_finite(out, op);
  return Tensor::make_result(
      big.shape(), std::move(out), result_dtype({&a, &b}), op, {a, b},
      [na, nb, dfda, dfdb](Tensor::Node& self) {
        auto& pa = *self.parents[0];
        auto& pb = *self.parents[1];
        const auto& g = self.grad;
        if (pa.requires_grad) {
          auto ga = pa.ensure_grad();
          for (std::size_t i = 0; i < g.size(); ++i)
            ga[i % na] += g[i] * dfda(pa.data[i % na], pb.data[i % nb]);
        }
        if (pb.requires_grad) {
          auto gb = pb.ensure_grad();
          for (std::size_t i = 0; i < g.size(); ++i)
            gb[i % nb] += g[i] * dfdb(pa.data[i % na], pb.data[i % nb]);
        }
      });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return elementwise_binary(
      a, b, "add", [](double x, double y) { return x + y; },
      [](double, double) { return 1.0; }, [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return elementwise_binary(
      a, b, "sub", [](double x, double y) { return x - y; },
      [](double, double) { return 1.0; }, [](double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return elementwise_binary(
      a, b, "mul", [](double x, double y) { return x * y; },
      [](double, double y) { return y; }, [](double x, double) { return x; });
}

Tensor scalar_mul(const Tensor& a, double s) {
  std::vector<double> out(a.data().begin(), a.data().end());
  for (double& x : out) x *= s;
  check_finite(out, "scalar_mul");
  return Tensor::make_result(a.shape(), std::move(out), a.dtype(), "scalar_mul",
                             {a}, [s](Tensor::Node& self) {
                               auto& p = *self.parents[0];
                               if (!p.requires_grad) return;
                               auto g = p.ensure_grad();
                               for (std::size_t i = 0; i < g.size(); ++i)
                                 g[i] += self.grad[i] * s;
                             });
}

Tensor scalar_add(const Tensor& a, double s) {
  std::vector<double> out(a.data().begin(), a.data().end());
  for (double& x : out) x += s;
  check_finite(out, "scalar_add");
  return Tensor::make_result(a.shape(), std::move(out), a.dtype(), "scalar_add",
                             {a}, [](Tensor::Node& self) {
                               auto& p = *self.parents[0];
                               if (!p.requires_grad) return;
                               auto g = p.ensure_grad();
                               for (std::size_t i = 0; i < g.size(); ++i)
                                 g[i] += self.grad[i];
                             });
}

// ---- matmul ----

namespace {

// C[m,n] += A[m,k] * B[k,n]
void gemm_acc(const double* a, const double* b, double* c, std::int64_t m,
              std::int64_t k, std::int64_t n) {
  for (std::int64_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    for (std::int64_t l = 0; l < k; ++l) {
      const double av = a[i * k + l];
      if (av == 0.0) continue;
      const double* brow = b + l * n;
      for (std::int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// C[m,n] += A[m,k] * B^T where Bt is [n,k]
void gemm_bt_acc(const double* a, const double* bt, double* c, std::int64_t m,
                 std::int64_t k, std::int64_t n) {
  for (std::int64_t i = 0; i < m; ++i) {
    for (std::int64_t j = 0; j < n; ++j) {
      double acc = 0.0;
      const double* arow = a + i * k;
      const double* brow = bt + j * k;
      for (std::int64_t l = 0; l < k; ++l) acc += arow[l] * brow[l];
      c[i * n + j] += acc;
    }
  }
}

// C[k,n] += A^T * B where A is [m,k], B is [m,n]
void gemm_at_acc(const double* a, const double* b, double* c, std::int64_t m,
                 std::int64_t k, std::int64_t n) {
  for (std::int64_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    const double* brow = b + i * n;
    for (std::int64_t l = 0; l < k; ++l) {
      const double av = arow[l];
      if (av == 0.0) continue;
      double* crow = c + l * n;
      for (std::int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  check(a.ndim() >= 2 && b.ndim() >= 2,
        "matmul: operands must have rank >= 2, got " + shape_str(a.shape()) +
            " and " + shape_str(b.shape()));
  const std::int64_t m = a.dim(-2), k = a.dim(-1);
  const std::int64_t k2 = b.dim(-2), n = b.dim(-1);
  check(k == k2, "matmul: inner dims differ, " + shape_str(a.shape()) + " x " +
                     shape_str(b.shape()));
  const bool b_shared = b.ndim() == 2;
  if (!b_shared) {
    check(a.shape().size() == b.shape().size() &&
              std::equal(a.shape().begin(), a.shape().end() - 2,
                         b.shape().begin()),
          "matmul: leading dims differ, " + shape_str(a.shape()) + " x " +
              shape_str(b.shape()));
  }
  const std::int64_t batches = a.numel() / (m * k);
  Shape out_shape(a.shape().begin(), a.shape().end() - 1);
  out_shape.push_back(n);
  std::vector<double> out(batches * m * n, 0.0);
  {
    const double* pa = a.data().data();
    const double* pb = b.data().data();
    for (std::int64_t t = 0; t < batches; ++t) {
      gemm_acc(pa + t * m * k, b_shared ? pb : pb + t * k * n,
               out.data() + t * m * n, m, k, n);
    }
  }
  check_finite(out, "matmul");
  return Tensor::make_result(
      std::move(out_shape), std::move(out), result_dtype({&a, &b}), "matmul",
      {a, b}, [m, k, n, batches, b_shared](Tensor::Node& self) {
        auto& pa = *self.parents[0];
        auto& pb = *self.parents[1];
        const double* g = self.grad.data();
        if (pa.requires_grad) {
          double* ga = pa.ensure_grad().data();
          const double* bd = pb.data.data();
          for (std::int64_t t = 0; t < batches; ++t) {
            gemm_bt_acc(g + t * m * n, b_shared ? bd : bd + t * k * n,
                        ga + t * m * k, m, n, k);
          }
        }
        if (pb.requires_grad) {
          double* gb = pb.ensure_grad().data();
          const double* ad = pa.data.data();
          for (std::int64_t t = 0; t < batches; ++t) {
            gemm_at_acc(ad + t * m * k, g + t * m * n,
                        b_shared ? gb : gb + t * k * n, m, k, n);
          }
        }
      });
}

// ---- Structural ops (copy validated values; no finite re-check) ----

Tensor concat(const std::vector<Tensor>& parts, int axis) {
  check(!parts.empty(), "concat: no inputs");
  const int nd = parts[0].ndim();
  const int ax = normalize_axis(axis, nd, "concat");
  Shape out_shape = parts[0].shape();
  std::int64_t total = 0;
  for (const Tensor& p : parts) {
    check(p.ndim() == nd, "concat: rank mismatch");
    for (int i = 0; i < nd; ++i) {
      check(i == ax || p.shape()[i] == out_shape[i],
            "concat: shapes " + shape_str(out_shape) + " and " +
                shape_str(p.shape()) + " differ off-axis");
    }
    total += p.shape()[ax];
  }
  out_shape[ax] = total;
  const auto d = reduce_dims(out_shape, ax);
  std::vector<double> out(numel_of(out_shape));
  std::vector<std::int64_t> offsets;  // per part, in axis units
  std::int64_t at = 0;
  for (const Tensor& p : parts) {
    offsets.push_back(at);
    const std::int64_t pn = p.shape()[ax];
    const double* src = p.data().data();
    for (std::int64_t o = 0; o < d.outer; ++o) {
      std::copy_n(src + o * pn * d.inner, pn * d.inner,
                  out.data() + (o * d.n + at) * d.inner);
    }
    at += pn;
  }
  std::vector<std::int64_t> part_sizes;
  DType dtype = DType::f32;
  for (const Tensor& p : parts) {
    part_sizes.push_back(p.shape()[ax]);
    if (p.dtype() == DType::f64) dtype = DType::f64;
  }
  return Tensor::make_result(
      out_shape, std::move(out), dtype, "concat", parts,
      [d, offsets, part_sizes](Tensor::Node& self) {
        for (std::size_t pi = 0; pi < self.parents.size(); ++pi) {
          auto& p = *self.parents[pi];
          if (!p.requires_grad) continue;
          double* gp = p.ensure_grad().data();
          const std::int64_t pn = part_sizes[pi];
          for (std::int64_t o = 0; o < d.outer; ++o) {
            const double* src =
                self.grad.data() + (o * d.n + offsets[pi]) * d.inner;
            double* dst = gp + o * pn * d.inner;
            for (std::int64_t i = 0; i < pn * d.inner; ++i) dst[i] += src[i];
          }
        }
      });
}

Tensor slice(const Tensor& x, int axis, std::int64_t start, std::int64_t len) {
  const int ax = normalize_axis(axis, x.ndim(), "slice");
  check(start >= 0 && len >= 0 && start + len <= x.shape()[ax],
        "slice: range [" + std::to_string(start) + "," +
            std::to_string(start + len) + ") out of bounds for dim " +
            std::to_string(x.shape()[ax]));
  const auto d = reduce_dims(x.shape(), ax);
  Shape out_shape = x.shape();
  out_shape[ax] = len;
  std::vector<double> out(numel_of(out_shape));
  const double* src = x.data().data();
  for (std::int64_t o = 0; o < d.outer; ++o) {
    std::copy_n(src + (o * d.n + start) * d.inner, len * d.inner,
                out.data() + o * len * d.inner);
  }
  return Tensor::make_result(
      std::move(out_shape), std::move(out), x.dtype(), "slice", {x},
      [d, start, len](Tensor::Node& self) {
        auto& p = *self.parents[0];
        if (!p.requires_grad) return;
        double* gp = p.ensure_grad().data();
        for (std::int64_t o = 0; o < d.outer; ++o) {
          const double* src = self.grad.data() + o * len * d.inner;
          double* dst = gp + (o * d.n + start) * d.inner;
          for (std::int64_t i = 0; i < len * d.inner; ++i) dst[i] += src[i];
        }
      });
}

Tensor transpose_last(const Tensor& x) {
  check(x.ndim() >= 2, "transpose: rank must be >= 2, got " +
                           shape_str(x.shape()));
  const std::int64_t m = x.dim(-2), n = x.dim(-1);
  const std::int64_t batches = x.numel() / (m * n);
  Shape out_shape = x.shape();
  std::swap(out_shape[out_shape.size() - 2], out_shape[out_shape.size() - 1]);
  std::vector<double> out(x.numel());
  const double* src = x.data().data();
  for (std::int64_t t = 0; t < batches; ++t) {
    for (std::int64_t i = 0; i < m; ++i)
      for (std::int64_t j = 0; j < n; ++j)
        out[t * m * n + j * m + i] = src[t * m * n + i * n + j];
  }
  return Tensor::make_result(
      std::move(out_shape), std::move(out), x.dtype(), "transpose", {x},
      [m, n, batches](Tensor::Node& self) {
        auto& p = *self.parents[0];
        if (!p.requires_grad) return;
        double* gp = p.ensure_grad().data();
        const double* g = self.grad.data();
        for (std::int64_t t = 0; t < batches; ++t) {
          for (std::int64_t j = 0; j < n; ++j)
            for (std::int64_t i = 0; i < m; ++i)
              gp[t * m * n + i * n + j] += g[t * m * n + j * m + i];
        }
      });
}

Tensor reshape(const Tensor& x, Shape shape) {
  check(numel_of(shape) == x.numel(),
        "reshape: cannot view " + shape_str(x.shape()) + " as " +
            shape_str(shape));
  std::vector<double> out(x.data().begin(), x.data().end());
  return Tensor::make_result(std::move(shape), std::move(out), x.dtype(),
                             "reshape", {x}, [](Tensor::Node& self) {
                               auto& p = *self.parents[0];
                               if (!p.requires_grad) return;
                               auto g = p.ensure_grad();
                               for (std::size_t i = 0; i < g.size(); ++i)
                                 g[i] += self.grad[i];
                             });
}

Tensor broadcast_to(const Tensor& x, Shape target) {
  check(is_suffix(x.shape(), target),
        "broadcast_to: " + shape_str(x.shape()) +
            " is not a trailing suffix of " + shape_str(target));
  const std::int64_t small_n = x.numel();
  const std::int64_t n = numel_of(target);
  std::vector<double> out(n);
  auto src = x.data();
  for (std::int64_t i = 0; i < n; ++i) out[i] = src[i % small_n];
  return Tensor::make_result(std::move(target), std::move(out), x.dtype(),
                             "broadcast_to", {x}, [](Tensor::Node& self) {
                               auto& p = *self.parents[0];
                               if (!p.requires_grad) return;
                               reduce_into_suffix(p.ensure_grad(), self.grad);
                             });
}

// ---- Reductions ----

Tensor sum_all(const Tensor& x) {
  double acc = 0.0;
  for (double v : x.data()) acc += v;
  std::vector<double> out{acc};
  check_finite(out, "sum");
  return Tensor::make_result({}, std::move(out), x.dtype(), "sum", {x},
                             [](Tensor::Node& self) {
                               auto& p = *self.parents[0];
                               if (!p.requires_grad) return;
                               auto g = p.ensure_grad();
                               const double gv = self.grad[0];
                               for (double& v : g) v += gv;
                             });
}

Tensor mean_all(const Tensor& x) {
  check(x.numel() > 0, "mean: empty tensor");
  const double inv = 1.0 / static_cast<double>(x.numel());
  double acc = 0.0;
  for (double v : x.data()) acc += v;
  std::vector<double> out{acc * inv};
  check_finite(out, "mean");
  return Tensor::make_result({}, std::move(out), x.dtype(), "mean", {x},
                             [inv](Tensor::Node& self) {
                               auto& p = *self.parents[0];
                               if (!p.requires_grad) return;
                               auto g = p.ensure_grad();
                               const double gv = self.grad[0] * inv;
                               for (double& v : g) v += gv;
                             });
}

namespace {

Tensor reduce_axis(const Tensor& x, int axis, bool take_mean,
                   const char* op) {
  const int ax = normalize_axis(axis, x.ndim(), op);
  const auto d = reduce_dims(x.shape(), ax);
  Shape out_shape;
  for (int i = 0; i < x.ndim(); ++i)
    if (i != ax) out_shape.push_back(x.shape()[i]);
  const double scale = take_mean ? 1.0 / static_cast<double>(d.n) : 1.0;
  std::vector<double> out(d.outer * d.inner, 0.0);
  const double* src = x.data().data();
  for (std::int64_t o = 0; o < d.outer; ++o)
    for (std::int64_t i = 0; i < d.n; ++i)
      for (std::int64_t j = 0; j < d.inner; ++j)
        out[o * d.inner + j] += src[(o * d.n + i) * d.inner + j];
  if (take_mean)
    for (double& v : out) v *= scale;
  check_finite(out, op);
  return Tensor::make_result(
      std::move(out_shape), std::move(out), x.dtype(), op, {x},
      [d, scale](Tensor::Node& self) {
        auto& p = *self.parents[0];
        if (!p.requires_grad) return;
        double* gp = p.ensure_grad().data();
        const double* g = self.grad.data();
        for (std::int64_t o = 0; o < d.outer; ++o)
          for (std::int64_t i = 0; i < d.n; ++i)
            for (std::int64_t j = 0; j < d.inner; ++j)
              gp[(o * d.n + i) * d.inner + j] += g[o * d.inner + j] * scale;
      });
}

}  // namespace

Tensor sum_axis(const Tensor& x, int axis) {
  return reduce_axis(x, axis, false, "sum_axis");
}

Tensor mean_axis(const Tensor& x, int axis) {
  return reduce_axis(x, axis, true, "mean_axis");
}

// ---- Elementwise unary ----

namespace {

template <typename Fwd, typename Bwd>
Tensor elementwise_unary(const Tensor& x, const char* op, Fwd fwd, Bwd dfdx) {
  std::vector<double> out(x.numel());
  auto src = x.data();
  for (std::int64_t i = 0; i < x.numel(); ++i) out[i] = fwd(src[i]);
  check_finite(out, op);
  return Tensor::make_result(
      x.shape(), std::move(out), x.dtype(), op, {x},
      [dfdx](Tensor::Node& self) {
        auto& p = *self.parents[0];
        if (!p.requires_grad) return;
        auto g = p.ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i)
          g[i] += self.grad[i] * dfdx(p.data[i], self.data[i]);
      });
}

}  // namespace

Tensor exp(const Tensor& x) {
  return elementwise_unary(
      x, "exp", [](double v) { return std::exp(v); },
      [](double, double y) { return y; });
}

Tensor log(const Tensor& x) {
  return elementwise_unary(
      x, "log", [](double v) { return std::log(v); },
      [](double v, double) { return 1.0 / v; });
}

Tensor sqrt(const Tensor& x) {
  return elementwise_unary(
      x, "sqrt", [](double v) { return std::sqrt(v); },
      [](double, double y) { return 0.5 / y; });
}

Tensor tanh(const Tensor& x) {
  return elementwise_unary(
      x, "tanh", [](double v) { return std::tanh(v); },
      [](double, double y) { return 1.0 - y * y; });
}

Tensor pow(const Tensor& x, double exponent) {
  return elementwise_unary(
      x, "pow", [exponent](double v) { return std::pow(v, exponent); },
      [exponent](double v, double) {
        return exponent * std::pow(v, exponent - 1.0);
      });
}

Tensor gelu(const Tensor& x) {
  constexpr double kInvSqrt2 = std::numbers::sqrt2 / 2.0;
  constexpr double kInvSqrt2Pi = 0.3989422804014327;  // 1/sqrt(2*pi)
  return elementwise_unary(
      x, "gelu",
      [](double v) { return 0.5 * v * (1.0 + std::erf(v * kInvSqrt2)); },
      [](double v, double) {
        const double phi = 0.5 * (1.0 + std::erf(v * kInvSqrt2));
        const double dens = kInvSqrt2Pi * std::exp(-0.5 * v * v);
        return phi + v * dens;
      });
}

// ---- softmax ----

Tensor softmax(const Tensor& x, int axis) {
  const int ax = normalize_axis(axis, x.ndim(), "softmax");
  const auto d = reduce_dims(x.shape(), ax);
  std::vector<double> out(x.numel());
  const double* src = x.data().data();
  for (std::int64_t o = 0; o < d.outer; ++o) {
    for (std::int64_t j = 0; j < d.inner; ++j) {
      const auto at = [&](std::int64_t i) {
        return (o * d.n + i) * d.inner + j;
      };
      double mx = src[at(0)];
      for (std::int64_t i = 1; i < d.n; ++i) mx = std::max(mx, src[at(i)]);
      double denom = 0.0;
      for (std::int64_t i = 0; i < d.n; ++i) {
        const double e = std::exp(src[at(i)] - mx);
        out[at(i)] = e;
        denom += e;
      }
      for (std::int64_t i = 0; i < d.n; ++i) out[at(i)] /= denom;
    }
  }
  check_finite(out, "softmax");
  return Tensor::make_result(
      x.shape(), std::move(out), x.dtype(), "softmax", {x},
      [d](Tensor::Node& self) {
        auto& p = *self.parents[0];
        if (!p.requires_grad) return;
        double* gp = p.ensure_grad().data();
        const double* y = self.data.data();
        const double* g = self.grad.data();
        for (std::int64_t o = 0; o < d.outer; ++o) {
          for (std::int64_t j = 0; j < d.inner; ++j) {
            const auto at = [&](std::int64_t i) {
              return (o * d.n + i) * d.inner + j;
            };
            double dot = 0.0;
            for (std::int64_t i = 0; i < d.n; ++i) dot += g[at(i)] * y[at(i)];
            for (std::int64_t i = 0; i < d.n; ++i)
              gp[at(i)] += y[at(i)] * (g[at(i)] - dot);
          }
        }
      });
}

// ---- rmsnorm ----

Tensor rmsnorm(const Tensor& x, const Tensor& gain, double eps) {
  check(gain.ndim() == 1 && gain.dim(0) == x.dim(-1),
        "rmsnorm: gain shape " + shape_str(gain.shape()) +
            " must match last dim of " + shape_str(x.shape()));
  const std::int64_t dlen = x.dim(-1);
  const std::int64_t lanes = x.numel() / dlen;
  std::vector<double> out(x.numel());
  std::vector<double> inv_rms(lanes);
  const double* src = x.data().data();
  const double* gd = gain.data().data();
  for (std::int64_t l = 0; l < lanes; ++l) {
    double ms = 0.0;
    for (std::int64_t i = 0; i < dlen; ++i) {
      const double v = src[l * dlen + i];
      ms += v * v;
    }
    ms = ms / static_cast<double>(dlen) + eps;
    if (ms == 0.0) {
      throw std::runtime_error("rmsnorm: zero vector with eps=0");
    }
    const double inv = 1.0 / std::sqrt(ms);
    inv_rms[l] = inv;
    for (std::int64_t i = 0; i < dlen; ++i)
      out[l * dlen + i] = gd[i] * src[l * dlen + i] * inv;
  }
  check_finite(out, "rmsnorm");
  return Tensor::make_result(
      x.shape(), std::move(out), result_dtype({&x, &gain}), "rmsnorm",
      {x, gain}, [dlen, lanes, inv_rms](Tensor::Node& self) {
        auto& px = *self.parents[0];
        auto& pg = *self.parents[1];
        const double* g = self.grad.data();
        const double* xd = px.data.data();
        const double* gd = pg.data.data();
        double* gx = px.requires_grad ? px.ensure_grad().data() : nullptr;
        double* gg = pg.requires_grad ? pg.ensure_grad().data() : nullptr;
        for (std::int64_t l = 0; l < lanes; ++l) {
          const double inv = inv_rms[l];
          if (gx) {
            double dot = 0.0;
            for (std::int64_t i = 0; i < dlen; ++i)
              dot += g[l * dlen + i] * gd[i] * xd[l * dlen + i];
            const double c = dot * inv * inv * inv / static_cast<double>(dlen);
            for (std::int64_t i = 0; i < dlen; ++i)
              gx[l * dlen + i] +=
                  g[l * dlen + i] * gd[i] * inv - xd[l * dlen + i] * c;
          }
          if (gg) {
            for (std::int64_t i = 0; i < dlen; ++i)
              gg[i] += g[l * dlen + i] * xd[l * dlen + i] * inv;
          }
        }
      });
}

// ---- dropout ----

Tensor dropout(const Tensor& x, double rate, bool training, Rng& rng) {
  check(rate >= 0.0 && rate < 1.0,
        "dropout: rate must be in [0,1), got " + std::to_string(rate));
  if (!training || rate == 0.0) {
    // Identity, but still a graph node so gradients flow.
    return scalar_mul(x, 1.0);
  }
  const double scale = 1.0 / (1.0 - rate);
  std::vector<double> mask(x.numel());
  for (double& m : mask) m = rng.uniform() < rate ? 0.0 : scale;
  std::vector<double> out(x.numel());
  auto src = x.data();
  for (std::int64_t i = 0; i < x.numel(); ++i) out[i] = src[i] * mask[i];
  check_finite(out, "dropout");
  return Tensor::make_result(x.shape(), std::move(out), x.dtype(), "dropout",
                             {x}, [mask](Tensor::Node& self) {
                               auto& p = *self.parents[0];
                               if (!p.requires_grad) return;
                               auto g = p.ensure_grad();
                               for (std::size_t i = 0; i < g.size(); ++i)
                                 g[i] += self.grad[i] * mask[i];
                             });
}

// ---- conv2d ----

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride,
              int pad) {
  check(x.ndim() == 4 && w.ndim() == 4 && b.ndim() == 1,
        "conv2d: expected x[N,C,H,W], w[O,C,kh,kw], b[O]");
  const std::int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const std::int64_t O = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  check(w.dim(1) == C, "conv2d: channel mismatch between " +
                           shape_str(x.shape()) + " and " +
                           shape_str(w.shape()));
  check(b.dim(0) == O, "conv2d: bias length mismatch");
  const std::int64_t Ho = (H + 2 * pad - kh) / stride + 1;
  const std::int64_t Wo = (W + 2 * pad - kw) / stride + 1;
  check(Ho > 0 && Wo > 0, "conv2d: kernel larger than padded input");
  std::vector<double> out(N * O * Ho * Wo);
  const double* xd = x.data().data();
  const double* wd = w.data().data();
  const double* bd = b.data().data();
  const auto x_at = [&](std::int64_t n, std::int64_t c, std::int64_t i,
                        std::int64_t j) {
    return ((n * C + c) * H + i) * W + j;
  };
  for (std::int64_t n = 0; n < N; ++n)
    for (std::int64_t o = 0; o < O; ++o)
      for (std::int64_t i = 0; i < Ho; ++i)
        for (std::int64_t j = 0; j < Wo; ++j) {
          double acc = bd[o];
          for (std::int64_t c = 0; c < C; ++c)
            for (std::int64_t u = 0; u < kh; ++u) {
              const std::int64_t ii = i * stride + u - pad;
              if (ii < 0 || ii >= H) continue;
              for (std::int64_t v = 0; v < kw; ++v) {
                const std::int64_t jj = j * stride + v - pad;
                if (jj < 0 || jj >= W) continue;
                acc += xd[x_at(n, c, ii, jj)] *
                       wd[((o * C + c) * kh + u) * kw + v];
              }
            }
          out[((n * O + o) * Ho + i) * Wo + j] = acc;
        }
  check_finite(out, "conv2d");
  return Tensor::make_result(
      {N, O, Ho, Wo}, std::move(out), result_dtype({&x, &w, &b}), "conv2d",
      {x, w, b}, [=](Tensor::Node& self) {
        auto& px = *self.parents[0];
        auto& pw = *self.parents[1];
        auto& pb = *self.parents[2];
        const double* g = self.grad.data();
        double* gx = px.requires_grad ? px.ensure_grad().data() : nullptr;
        double* gw = pw.requires_grad ? pw.ensure_grad().data() : nullptr;
        double* gb = pb.requires_grad ? pb.ensure_grad().data() : nullptr;
        const double* xd2 = px.data.data();
        const double* wd2 = pw.data.data();
        for (std::int64_t n = 0; n < N; ++n)
          for (std::int64_t o = 0; o < O; ++o)
            for (std::int64_t i = 0; i < Ho; ++i)
              for (std::int64_t j = 0; j < Wo; ++j) {
                const double gv = g[((n * O + o) * Ho + i) * Wo + j];
                if (gb) gb[o] += gv;
                for (std::int64_t c = 0; c < C; ++c)
                  for (std::int64_t u = 0; u < kh; ++u) {
                    const std::int64_t ii = i * stride + u - pad;
                    if (ii < 0 || ii >= H) continue;
                    for (std::int64_t v = 0; v < kw; ++v) {
                      const std::int64_t jj = j * stride + v - pad;
                      if (jj < 0 || jj >= W) continue;
                      const std::int64_t xi = ((n * C + c) * H + ii) * W + jj;
                      const std::int64_t wi = ((o * C + c) * kh + u) * kw + v;
                      if (gx) gx[xi] += gv * wd2[wi];
                      if (gw) gw[wi] += gv * xd2[xi];
                    }
                  }
              }
      });
}

// ---- grad_check ----

double grad_check(const std::function<Tensor(const Tensor&)>& f,
                  const Tensor& x, double eps) {
  check(eps > 0.0, "grad_check: eps must be positive");
  Tensor probe = x.detach();
  probe.set_requires_grad(true);
  Tensor y = f(probe);
  check(y.numel() == 1, "grad_check: f must be scalar-valued");
  y.backward();
  std::vector<double> analytic(x.numel(), 0.0);
  if (!probe.grad().empty())
    analytic.assign(probe.grad().begin(), probe.grad().end());

  double max_err = 0.0;
  NoGradGuard no_grad;
  std::vector<double> base(x.data().begin(), x.data().end());
  for (std::int64_t i = 0; i < x.numel(); ++i) {
    std::vector<double> vp = base, vm = base;
    vp[i] += eps;
    vm[i] -= eps;
    const double fp =
        f(Tensor::from_data(x.shape(), std::move(vp), x.dtype())).item();
    const double fm =
        f(Tensor::from_data(x.shape(), std::move(vm), x.dtype())).item();
    const double numeric = (fp - fm) / (2.0 * eps);
    const double a = analytic[i];
    const double err = std::abs(a - numeric) /
                       std::max({1.0, std::abs(a), std::abs(numeric)});
    max_err = std::max(max_err, err);
  }
  return max_err;
}

}  // namespace vtf::ad
