// SPDX-License-Identifier: Apache-2.0
//
// Dense row-major tensors with a dynamic reverse-mode tape.
//
// A Tensor is a shared handle to a graph node. Ops record their inputs and a
// backward closure on the result whenever any input requires a gradient and
// recording is enabled; the graph lives exactly as long as the handles that
// reach it. Only rank 0, 1 and 2 are used by the pipeline.
#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace ainet {

#ifdef AINET_USE_FLOAT32
using Real = float;
#else
using Real = double;
#endif

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);
std::size_t shape_numel(const Shape& shape);

namespace detail {

struct Node {
  Shape shape;
  std::vector<Real> value;
  std::vector<Real> grad;  // leaves: sized at creation; results: sized by backward()
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Accumulates this node's grad into its parents' grads.
  std::function<void(Node&)> backward_fn;
};

}  // namespace detail

class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<Real> values, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor scalar(Real value, bool requires_grad = false);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<Real> values,
                       bool requires_grad = false);
  static Tensor vector(std::vector<Real> values, bool requires_grad = false);

  bool defined() const noexcept { return static_cast<bool>(node_); }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t i) const { return shape().at(i); }
  std::size_t numel() const { return node().value.size(); }
  // Row count of a matrix; 1 for vectors and scalars.
  std::size_t rows() const;
  // Column count of a matrix; length of a vector.
  std::size_t cols() const;

  std::span<const Real> values() const { return node().value; }
  // In-place access for the optimizer and parameter loaders only.
  std::span<Real> values_mut() { return node().value; }
  std::span<const Real> grad() const { return node().grad; }
  std::span<Real> grad_mut() { return node().grad; }

  bool requires_grad() const { return node().requires_grad; }
  void zero_grad();

  Real item() const;
  Real operator[](std::size_t i) const { return node().value[i]; }
  Real at(std::size_t row, std::size_t col) const;

  // Same values, no history, no gradient.
  Tensor detach() const;

  const std::shared_ptr<detail::Node>& node_ptr() const { return node_; }

 private:
  friend Tensor make_result(Shape, std::vector<Real>, std::initializer_list<const Tensor*>,
                            std::function<void(detail::Node&)>);
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  detail::Node& node() const;

  std::shared_ptr<detail::Node> node_;
};

// Builds an op result; records the backward closure only if recording is on
// and some input requires a gradient.
Tensor make_result(Shape shape, std::vector<Real> value, std::initializer_list<const Tensor*> inputs,
                   std::function<void(detail::Node&)> backward_fn);

bool grad_recording_enabled();

/// Disables tape recording for its lifetime (per thread).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// ---- ops -------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);

// Elementwise; `b` may also be a length-D vector broadcast over the rows of an
// M x D matrix `a`.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
// Elementwise, identical shapes only.
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, Real factor);

Tensor relu(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor log(const Tensor& x);
// Gradient passes only where lo < x < hi.
Tensor clamp(const Tensor& x, Real lo, Real hi);

Tensor softmax_rows(const Tensor& x);
Tensor mean_rows(const Tensor& x);
Tensor sum(const Tensor& x);
// sum((a - b)^2) as a scalar.
Tensor squared_difference_sum(const Tensor& a, const Tensor& b);

Tensor transpose(const Tensor& x);
Tensor reshape(const Tensor& x, Shape shape);
Tensor concat_rows(std::span<const Tensor> parts);
Tensor concat_cols(std::span<const Tensor> parts);
Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t count);
Tensor gather_rows(const Tensor& x, std::span<const std::size_t> indices);

/// Forward-only cosine similarity; each norm gets kCosineEps added so a
/// zero vector yields a similarity near zero instead of a division by zero.
inline constexpr Real kCosineEps = static_cast<Real>(1e-12);
Real cosine(std::span<const Real> u, std::span<const Real> v);
Real cosine(const Tensor& u, const Tensor& v);

/// Populates grad of every tracked tensor reachable from `loss` with
/// d loss / d tensor. Leaf gradients accumulate across calls.
void backward(const Tensor& loss);

}  // namespace ainet
