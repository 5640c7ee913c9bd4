// SPDX-License-Identifier: Apache-2.0
#include "ainet/tensor.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "ainet/errors.hpp"

namespace ainet {

namespace {

using RowMat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

thread_local bool g_recording = true;

bool is_matrix(const Tensor& t) { return t.rank() == 2; }

void require_matrix(const Tensor& t, const char* op) {
  if (!is_matrix(t)) {
    throw DimensionError(std::string(op) + ": expected a matrix, got shape " +
                         shape_string(t.shape()));
  }
}

bool tracks(const detail::Node& n) { return n.requires_grad; }

// Row-broadcast pattern: a is M x D, b is D.
bool row_broadcast(const Tensor& a, const Tensor& b) {
  return a.rank() == 2 && b.rank() == 1 && a.dim(1) == b.dim(0);
}

enum class Binary { Add, Sub };

Tensor add_sub(const Tensor& a, const Tensor& b, Binary kind, const char* name) {
  const bool same = a.shape() == b.shape();
  const bool bcast = !same && row_broadcast(a, b);
  if (!same && !bcast) {
    throw DimensionError(std::string(name) + ": shapes " + shape_string(a.shape()) + " and " +
                         shape_string(b.shape()) + " are incompatible");
  }
  const Real sign = kind == Binary::Add ? Real(1) : Real(-1);
  auto av = a.values();
  auto bv = b.values();
  std::vector<Real> out(av.size());
  const std::size_t width = bv.size();
  for (std::size_t i = 0; i < av.size(); ++i) {
    const Real rhs = bcast ? bv[i % width] : bv[i];
    out[i] = kind == Binary::Add ? av[i] + rhs : av[i] - rhs;
  }
  return make_result(a.shape(), std::move(out), {&a, &b}, [sign, width, bcast](detail::Node& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    if (tracks(pa)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) pa.grad[i] += self.grad[i];
    }
    if (tracks(pb)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) {
        pb.grad[bcast ? i % width : i] += sign * self.grad[i];
      }
    }
  });
}

template <typename Fwd, typename Deriv>
Tensor unary(const Tensor& x, Fwd fwd, Deriv deriv) {
  auto xv = x.values();
  std::vector<Real> out(xv.size());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = fwd(xv[i]);
  // deriv(input, output) -> local derivative
  return make_result(x.shape(), std::move(out), {&x}, [deriv](detail::Node& self) {
    auto& px = *self.parents[0];
    if (!tracks(px)) return;
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      px.grad[i] += self.grad[i] * deriv(px.value[i], self.value[i]);
    }
  });
}

}  // namespace

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

// ---- Tensor ----------------------------------------------------------------

Tensor::Tensor(Shape shape, std::vector<Real> values, bool requires_grad)
    : node_(std::make_shared<detail::Node>()) {
  if (shape_numel(shape) != values.size()) {
    throw DimensionError("tensor shape " + shape_string(shape) + " does not hold " +
                         std::to_string(values.size()) + " values");
  }
  node_->shape = std::move(shape);
  node_->value = std::move(values);
  node_->requires_grad = requires_grad;
  if (requires_grad) node_->grad.assign(node_->value.size(), Real(0));
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  const std::size_t n = shape_numel(shape);
  return Tensor(std::move(shape), std::vector<Real>(n, Real(0)), requires_grad);
}

Tensor Tensor::scalar(Real value, bool requires_grad) {
  return Tensor(Shape{}, std::vector<Real>{value}, requires_grad);
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<Real> values,
                      bool requires_grad) {
  return Tensor(Shape{rows, cols}, std::move(values), requires_grad);
}

Tensor Tensor::vector(std::vector<Real> values, bool requires_grad) {
  const std::size_t n = values.size();
  return Tensor(Shape{n}, std::move(values), requires_grad);
}

detail::Node& Tensor::node() const {
  if (!node_) throw ContractError("use of an undefined tensor");
  return *node_;
}

const Shape& Tensor::shape() const { return node().shape; }

std::size_t Tensor::rows() const { return rank() == 2 ? dim(0) : 1; }

std::size_t Tensor::cols() const {
  if (rank() == 2) return dim(1);
  if (rank() == 1) return dim(0);
  return 1;
}

void Tensor::zero_grad() {
  auto& g = node().grad;
  std::fill(g.begin(), g.end(), Real(0));
}

Real Tensor::item() const {
  if (numel() != 1) {
    throw ContractError("item() on tensor of shape " + shape_string(shape()));
  }
  return node().value[0];
}

Real Tensor::at(std::size_t row, std::size_t col) const {
  if (rank() != 2 || row >= dim(0) || col >= dim(1)) {
    throw IndexError("at(" + std::to_string(row) + ", " + std::to_string(col) +
                     ") out of range for shape " + shape_string(shape()));
  }
  return node().value[row * dim(1) + col];
}

Tensor Tensor::detach() const { return Tensor(shape(), node().value, false); }

Tensor make_result(Shape shape, std::vector<Real> value, std::initializer_list<const Tensor*> inputs,
                   std::function<void(detail::Node&)> backward_fn) {
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  bool any = false;
  if (g_recording) {
    for (const Tensor* t : inputs) any = any || t->requires_grad();
  }
  if (any) {
    node->requires_grad = true;
    node->parents.reserve(inputs.size());
    for (const Tensor* t : inputs) node->parents.push_back(t->node_ptr());
    node->backward_fn = std::move(backward_fn);
  }
  return Tensor(std::move(node));
}

bool grad_recording_enabled() { return g_recording; }

NoGradGuard::NoGradGuard() : previous_(g_recording) { g_recording = false; }
NoGradGuard::~NoGradGuard() { g_recording = previous_; }

// ---- ops -------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (!is_matrix(a) || !is_matrix(b) || a.dim(1) != b.dim(0)) {
    throw DimensionError("matmul: shapes " + shape_string(a.shape()) + " and " +
                         shape_string(b.shape()) + " do not chain");
  }
  const auto m = static_cast<Eigen::Index>(a.dim(0));
  const auto k = static_cast<Eigen::Index>(a.dim(1));
  const auto p = static_cast<Eigen::Index>(b.dim(1));
  std::vector<Real> out(static_cast<std::size_t>(m * p));
  MutMap c(out.data(), m, p);
  if (k == 0) {
    c.setZero();
  } else {
    c.noalias() = ConstMap(a.values().data(), m, k) * ConstMap(b.values().data(), k, p);
  }
  return make_result(Shape{a.dim(0), b.dim(1)}, std::move(out), {&a, &b},
                     [m, k, p](detail::Node& self) {
                       auto& pa = *self.parents[0];
                       auto& pb = *self.parents[1];
                       if (k == 0) return;
                       ConstMap dc(self.grad.data(), m, p);
                       if (tracks(pa)) {
                         MutMap(pa.grad.data(), m, k).noalias() +=
                             dc * ConstMap(pb.value.data(), k, p).transpose();
                       }
                       if (tracks(pb)) {
                         MutMap(pb.grad.data(), k, p).noalias() +=
                             ConstMap(pa.value.data(), m, k).transpose() * dc;
                       }
                     });
}

Tensor add(const Tensor& a, const Tensor& b) { return add_sub(a, b, Binary::Add, "add"); }
Tensor sub(const Tensor& a, const Tensor& b) { return add_sub(a, b, Binary::Sub, "sub"); }

Tensor mul(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError("mul: shapes " + shape_string(a.shape()) + " and " +
                         shape_string(b.shape()) + " differ");
  }
  auto av = a.values();
  auto bv = b.values();
  std::vector<Real> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * bv[i];
  return make_result(a.shape(), std::move(out), {&a, &b}, [](detail::Node& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    if (tracks(pa)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) pa.grad[i] += self.grad[i] * pb.value[i];
    }
    if (tracks(pb)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) pb.grad[i] += self.grad[i] * pa.value[i];
    }
  });
}

Tensor scale(const Tensor& x, Real factor) {
  return unary(
      x, [factor](Real v) { return v * factor; }, [factor](Real, Real) { return factor; });
}

Tensor relu(const Tensor& x) {
  return unary(
      x, [](Real v) { return v > Real(0) ? v : Real(0); },
      [](Real in, Real) { return in > Real(0) ? Real(1) : Real(0); });
}

Tensor tanh(const Tensor& x) {
  return unary(
      x, [](Real v) { return std::tanh(v); }, [](Real, Real out) { return Real(1) - out * out; });
}

Tensor sigmoid(const Tensor& x) {
  return unary(
      x,
      [](Real v) {
        if (v >= Real(0)) return Real(1) / (Real(1) + std::exp(-v));
        const Real e = std::exp(v);
        return e / (Real(1) + e);
      },
      [](Real, Real out) { return out * (Real(1) - out); });
}

Tensor log(const Tensor& x) {
  return unary(
      x, [](Real v) { return std::log(v); }, [](Real in, Real) { return Real(1) / in; });
}

Tensor clamp(const Tensor& x, Real lo, Real hi) {
  return unary(
      x, [lo, hi](Real v) { return std::clamp(v, lo, hi); },
      [lo, hi](Real in, Real) { return (in > lo && in < hi) ? Real(1) : Real(0); });
}

Tensor softmax_rows(const Tensor& x) {
  require_matrix(x, "softmax_rows");
  const std::size_t m = x.dim(0);
  const std::size_t p = x.dim(1);
  auto xv = x.values();
  std::vector<Real> out(xv.size());
  for (std::size_t i = 0; i < m && p > 0; ++i) {
    const Real* row = xv.data() + i * p;
    Real* dst = out.data() + i * p;
    const Real mx = *std::max_element(row, row + p);
    Real total = 0;
    for (std::size_t j = 0; j < p; ++j) {
      dst[j] = std::exp(row[j] - mx);
      total += dst[j];
    }
    for (std::size_t j = 0; j < p; ++j) dst[j] /= total;
  }
  return make_result(x.shape(), std::move(out), {&x}, [m, p](detail::Node& self) {
    auto& px = *self.parents[0];
    if (!tracks(px)) return;
    for (std::size_t i = 0; i < m; ++i) {
      const Real* y = self.value.data() + i * p;
      const Real* g = self.grad.data() + i * p;
      Real dot = 0;
      for (std::size_t j = 0; j < p; ++j) dot += g[j] * y[j];
      Real* dx = px.grad.data() + i * p;
      for (std::size_t j = 0; j < p; ++j) dx[j] += y[j] * (g[j] - dot);
    }
  });
}

Tensor mean_rows(const Tensor& x) {
  require_matrix(x, "mean_rows");
  const std::size_t m = x.dim(0);
  const std::size_t d = x.dim(1);
  if (m == 0) throw EmptyInputError("mean_rows: matrix has no rows");
  auto xv = x.values();
  std::vector<Real> out(d, Real(0));
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < d; ++j) out[j] += xv[i * d + j];
  }
  const Real inv = Real(1) / static_cast<Real>(m);
  for (auto& v : out) v *= inv;
  return make_result(Shape{d}, std::move(out), {&x}, [m, d, inv](detail::Node& self) {
    auto& px = *self.parents[0];
    if (!tracks(px)) return;
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < d; ++j) px.grad[i * d + j] += self.grad[j] * inv;
    }
  });
}

Tensor sum(const Tensor& x) {
  Real total = 0;
  for (Real v : x.values()) total += v;
  return make_result(Shape{}, std::vector<Real>{total}, {&x}, [](detail::Node& self) {
    auto& px = *self.parents[0];
    if (!tracks(px)) return;
    for (auto& g : px.grad) g += self.grad[0];
  });
}

Tensor squared_difference_sum(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError("squared_difference_sum: shapes " + shape_string(a.shape()) + " and " +
                         shape_string(b.shape()) + " differ");
  }
  auto av = a.values();
  auto bv = b.values();
  Real total = 0;
  for (std::size_t i = 0; i < av.size(); ++i) {
    const Real d = av[i] - bv[i];
    total += d * d;
  }
  return make_result(Shape{}, std::vector<Real>{total}, {&a, &b}, [](detail::Node& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    const Real g = self.grad[0];
    for (std::size_t i = 0; i < pa.value.size(); ++i) {
      const Real d = Real(2) * (pa.value[i] - pb.value[i]) * g;
      if (tracks(pa)) pa.grad[i] += d;
      if (tracks(pb)) pb.grad[i] -= d;
    }
  });
}

Tensor transpose(const Tensor& x) {
  require_matrix(x, "transpose");
  const std::size_t m = x.dim(0);
  const std::size_t p = x.dim(1);
  auto xv = x.values();
  std::vector<Real> out(xv.size());
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < p; ++j) out[j * m + i] = xv[i * p + j];
  }
  return make_result(Shape{p, m}, std::move(out), {&x}, [m, p](detail::Node& self) {
    auto& px = *self.parents[0];
    if (!tracks(px)) return;
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < p; ++j) px.grad[i * p + j] += self.grad[j * m + i];
    }
  });
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw DimensionError("reshape: cannot view " + shape_string(x.shape()) + " as " +
                         shape_string(shape));
  }
  auto xv = x.values();
  return make_result(std::move(shape), std::vector<Real>(xv.begin(), xv.end()), {&x},
                     [](detail::Node& self) {
                       auto& px = *self.parents[0];
                       if (!tracks(px)) return;
                       for (std::size_t i = 0; i < self.grad.size(); ++i) px.grad[i] += self.grad[i];
                     });
}

namespace {

// make_result takes an initializer_list; variadic inputs are wired by hand.
Tensor make_result_many(Shape shape, std::vector<Real> value, std::span<const Tensor> inputs,
                        std::function<void(detail::Node&)> backward_fn) {
  Tensor out = make_result(std::move(shape), std::move(value), {}, nullptr);
  bool any = false;
  if (grad_recording_enabled()) {
    for (const auto& t : inputs) any = any || t.requires_grad();
  }
  if (!any) return out;
  auto& node = *out.node_ptr();
  node.requires_grad = true;
  for (const auto& t : inputs) node.parents.push_back(t.node_ptr());
  node.backward_fn = std::move(backward_fn);
  return out;
}

}  // namespace

Tensor concat_rows(std::span<const Tensor> parts) {
  if (parts.empty()) throw EmptyInputError("concat_rows: no inputs");
  const std::size_t d = parts[0].cols();
  std::size_t rows = 0;
  for (const auto& t : parts) {
    require_matrix(t, "concat_rows");
    if (t.dim(1) != d) {
      throw DimensionError("concat_rows: width " + std::to_string(t.dim(1)) + " vs " +
                           std::to_string(d));
    }
    rows += t.dim(0);
  }
  std::vector<Real> out;
  out.reserve(rows * d);
  for (const auto& t : parts) out.insert(out.end(), t.values().begin(), t.values().end());
  return make_result_many(Shape{rows, d}, std::move(out), parts, [](detail::Node& self) {
    std::size_t offset = 0;
    for (auto& parent : self.parents) {
      const std::size_t n = parent->value.size();
      if (parent->requires_grad) {
        for (std::size_t i = 0; i < n; ++i) parent->grad[i] += self.grad[offset + i];
      }
      offset += n;
    }
  });
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) throw EmptyInputError("concat_cols: no inputs");
  const std::size_t m = parts[0].rows();
  std::size_t width = 0;
  std::vector<std::size_t> widths;
  for (const auto& t : parts) {
    require_matrix(t, "concat_cols");
    if (t.dim(0) != m) {
      throw DimensionError("concat_cols: height " + std::to_string(t.dim(0)) + " vs " +
                           std::to_string(m));
    }
    widths.push_back(t.dim(1));
    width += t.dim(1);
  }
  std::vector<Real> out(m * width);
  std::size_t col = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    auto v = parts[k].values();
    for (std::size_t i = 0; i < m; ++i) {
      std::copy_n(v.data() + i * widths[k], widths[k], out.data() + i * width + col);
    }
    col += widths[k];
  }
  return make_result_many(Shape{m, width}, std::move(out), parts,
                          [m, width, widths](detail::Node& self) {
                            std::size_t col = 0;
                            for (std::size_t k = 0; k < self.parents.size(); ++k) {
                              auto& parent = *self.parents[k];
                              if (parent.requires_grad) {
                                for (std::size_t i = 0; i < m; ++i) {
                                  for (std::size_t j = 0; j < widths[k]; ++j) {
                                    parent.grad[i * widths[k] + j] += self.grad[i * width + col + j];
                                  }
                                }
                              }
                              col += widths[k];
                            }
                          });
}

Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t count) {
  require_matrix(x, "slice_cols");
  const std::size_t m = x.dim(0);
  const std::size_t p = x.dim(1);
  if (begin + count > p) {
    throw IndexError("slice_cols: [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                     ") exceeds width " + std::to_string(p));
  }
  auto xv = x.values();
  std::vector<Real> out(m * count);
  for (std::size_t i = 0; i < m; ++i) {
    std::copy_n(xv.data() + i * p + begin, count, out.data() + i * count);
  }
  return make_result(Shape{m, count}, std::move(out), {&x}, [m, p, begin, count](detail::Node& self) {
    auto& px = *self.parents[0];
    if (!tracks(px)) return;
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < count; ++j) px.grad[i * p + begin + j] += self.grad[i * count + j];
    }
  });
}

Tensor gather_rows(const Tensor& x, std::span<const std::size_t> indices) {
  require_matrix(x, "gather_rows");
  const std::size_t m = x.dim(0);
  const std::size_t d = x.dim(1);
  for (std::size_t idx : indices) {
    if (idx >= m) {
      throw IndexError("gather_rows: index " + std::to_string(idx) + " out of range for " +
                       std::to_string(m) + " rows");
    }
  }
  auto xv = x.values();
  std::vector<Real> out(indices.size() * d);
  for (std::size_t s = 0; s < indices.size(); ++s) {
    std::copy_n(xv.data() + indices[s] * d, d, out.data() + s * d);
  }
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  const Shape shape{idx.size(), d};
  return make_result(shape, std::move(out), {&x},
                     [idx = std::move(idx), d](detail::Node& self) {
                       auto& px = *self.parents[0];
                       if (!tracks(px)) return;
                       for (std::size_t s = 0; s < idx.size(); ++s) {
                         for (std::size_t j = 0; j < d; ++j) {
                           px.grad[idx[s] * d + j] += self.grad[s * d + j];
                         }
                       }
                     });
}

Real cosine(std::span<const Real> u, std::span<const Real> v) {
  if (u.size() != v.size()) {
    throw DimensionError("cosine: lengths " + std::to_string(u.size()) + " and " +
                         std::to_string(v.size()) + " differ");
  }
  Real dot = 0;
  Real uu = 0;
  Real vv = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    uu += u[i] * u[i];
    vv += v[i] * v[i];
  }
  return dot / ((std::sqrt(uu) + kCosineEps) * (std::sqrt(vv) + kCosineEps));
}

Real cosine(const Tensor& u, const Tensor& v) { return cosine(u.values(), v.values()); }

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw ContractError("backward: loss must be a scalar, got shape " +
                        (loss.defined() ? shape_string(loss.shape()) : std::string("<undefined>")));
  }
  if (!loss.requires_grad()) {
    throw ContractError("backward: loss does not depend on any tracked tensor");
  }
  // Iterative post-order DFS gives a topological order (parents first).
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> seen;
  std::vector<std::pair<detail::Node*, std::size_t>> stack;
  stack.emplace_back(loss.node_ptr().get(), 0);
  seen.insert(loss.node_ptr().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      detail::Node* parent = node->parents[next++].get();
      if (parent->requires_grad && seen.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  // Intermediate gradients are allocated here and recomputed from scratch;
  // leaves accumulate.
  for (detail::Node* n : order) {
    if (n->backward_fn) n->grad.assign(n->value.size(), Real(0));
  }
  loss.node_ptr()->grad[0] += Real(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->backward_fn) (*it)->backward_fn(**it);
  }
}

}  // namespace ainet
