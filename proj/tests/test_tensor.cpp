// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "ainet/errors.hpp"
#include "ainet/tensor.hpp"
#include "support.hpp"

using namespace ainet;
using testing::max_fd_error;
using testing::random_matrix;

namespace {

CounterRng rng_for(const char* name) { return CounterRng(substream_key(1234, name)); }

}  // namespace

TEST_CASE("matmul identity and hand cases") {
  const Tensor eye = Tensor::matrix(2, 2, {1, 0, 0, 1});
  const Tensor m = Tensor::matrix(2, 2, {1, 2, 3, 4});
  const Tensor r = matmul(eye, m);
  CHECK(std::vector<Real>(r.values().begin(), r.values().end()) == std::vector<Real>{1, 2, 3, 4});
  CHECK(matmul(Tensor::matrix(1, 2, {1, 2}), Tensor::matrix(2, 1, {3, 4})).item() == 11);
}

TEST_CASE("matmul matches a triple loop") {
  auto rng = rng_for("matmul");
  const Tensor a = random_matrix(rng, 3, 4);
  const Tensor b = random_matrix(rng, 4, 2);
  const Tensor c = matmul(a, b);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      double s = 0;
      for (std::size_t k = 0; k < 4; ++k) s += a.at(i, k) * b.at(k, j);
      CHECK(std::abs(c.at(i, j) - s) < 1e-12);
    }
  }
}

TEST_CASE("matmul shape mismatch names both shapes") {
  const Tensor a = Tensor::zeros({2, 3});
  const Tensor b = Tensor::zeros({2, 3});
  try {
    matmul(a, b);
    FAIL("expected DimensionError");
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("2x3") != std::string::npos);
  }
}

TEST_CASE("softmax rows") {
  const Tensor s = softmax_rows(Tensor::matrix(2, 3, {5, 5, 5, 0, std::log(2.0), -1e300}));
  CHECK(std::abs(s.at(0, 0) - 1.0 / 3) < 1e-15);
  CHECK(std::abs(s.at(1, 0) - 1.0 / 3) < 1e-12);
  CHECK(std::abs(s.at(1, 1) - 2.0 / 3) < 1e-12);
  CHECK(s.at(1, 2) == 0.0);

  auto rng = rng_for("softmax");
  const Tensor x = random_matrix(rng, 4, 5, false, 3.0);
  std::vector<Real> shifted(x.values().begin(), x.values().end());
  for (auto& v : shifted) v += 100;
  const Tensor a = softmax_rows(x);
  const Tensor b = softmax_rows(Tensor::matrix(4, 5, shifted));
  for (std::size_t i = 0; i < a.numel(); ++i) CHECK(std::abs(a[i] - b[i]) < 1e-12);
  for (std::size_t r = 0; r < 4; ++r) {
    double total = 0;
    for (std::size_t c = 0; c < 5; ++c) total += a.at(r, c);
    CHECK(std::abs(total - 1) < 1e-9);
  }
}

TEST_CASE("mean_rows") {
  const Tensor m = mean_rows(Tensor::matrix(2, 2, {1, 3, 3, 1}));
  CHECK(m.shape() == Shape{2});
  CHECK(m[0] == 2);
  CHECK(m[1] == 2);
  auto rng = rng_for("mean");
  const Tensor x = random_matrix(rng, 5, 3);
  const Tensor mean = mean_rows(x);
  for (std::size_t d = 0; d < 3; ++d) {
    double s = 0;
    for (std::size_t i = 0; i < 5; ++i) s += x.at(i, d);
    CHECK(std::abs(mean[d] - s / 5) < 1e-12);
  }
  CHECK_THROWS_AS(mean_rows(Tensor::zeros({0, 3})), EmptyInputError);
}

TEST_CASE("cosine") {
  const std::vector<Real> v{0.3, -2, 5};
  CHECK(std::abs(cosine(v, v) - 1) < 1e-12);
  CHECK(cosine(std::vector<Real>{1, 0}, std::vector<Real>{0, 1}) == 0);
  const double dot = 1 * 4 + 2 * 5 + 3 * 6;
  const double oracle = dot / (std::sqrt(14.0) * std::sqrt(77.0));
  CHECK(std::abs(cosine(std::vector<Real>{1, 2, 3}, std::vector<Real>{4, 5, 6}) - oracle) < 1e-12);
  const Real zero_sim = cosine(std::vector<Real>{0, 0}, std::vector<Real>{1, 1});
  CHECK(std::isfinite(zero_sim));
  CHECK(std::abs(zero_sim) < 1e-9);
  CHECK_THROWS_AS(cosine(std::vector<Real>{1}, std::vector<Real>{1, 2}), DimensionError);
}

TEST_CASE("gather_rows") {
  const Tensor x = Tensor::matrix(3, 2, {1, 2, 3, 4, 5, 6}, true);
  const std::vector<std::size_t> all{0, 1, 2};
  const Tensor same = gather_rows(x, all);
  CHECK(std::equal(same.values().begin(), same.values().end(), x.values().begin()));
  const std::vector<std::size_t> swapped{2, 0};
  const Tensor r = gather_rows(x, swapped);
  CHECK(std::vector<Real>(r.values().begin(), r.values().end()) == std::vector<Real>{5, 6, 1, 2});

  const std::vector<std::size_t> one{1};
  backward(sum(gather_rows(x, one)));
  CHECK(std::vector<Real>(x.grad().begin(), x.grad().end()) == std::vector<Real>{0, 0, 1, 1, 0, 0});

  const std::vector<std::size_t> bad{3};
  try {
    gather_rows(x, bad);
    FAIL("expected IndexError");
  } catch (const IndexError& e) {
    CHECK(std::string(e.what()).find("3") != std::string::npos);
  }
}

TEST_CASE("backward closed forms") {
  Tensor x = Tensor::vector({1, -2, 3}, true);
  backward(sum(x));
  CHECK(std::vector<Real>(x.grad().begin(), x.grad().end()) == std::vector<Real>{1, 1, 1});

  Tensor y = Tensor::matrix(1, 3, {0.5, -1, 2}, true);
  backward(matmul(y, transpose(y)));
  CHECK(std::vector<Real>(y.grad().begin(), y.grad().end()) == std::vector<Real>{1, -2, 4});
}

TEST_CASE("backward rejects non-scalars and untracked losses") {
  const Tensor x = Tensor::vector({1, 2}, true);
  CHECK_THROWS_AS(backward(x), ContractError);
  CHECK_THROWS_AS(backward(sum(Tensor::vector({1, 2}))), ContractError);
}

TEST_CASE("a graph used twice accumulates exactly twice") {
  auto rng = rng_for("twice");
  Tensor w = random_matrix(rng, 3, 3, true);
  const Tensor in = random_matrix(rng, 4, 3);
  const Tensor loss = sum(tanh(matmul(in, w)));
  backward(loss);
  const std::vector<Real> once(w.grad().begin(), w.grad().end());
  backward(loss);
  for (std::size_t i = 0; i < once.size(); ++i) CHECK(w.grad()[i] == 2 * once[i]);
}

TEST_CASE("NoGradGuard records nothing") {
  Tensor w = Tensor::vector({1, 2}, true);
  Tensor out;
  {
    NoGradGuard g;
    out = scale(w, 2);
  }
  CHECK_FALSE(out.requires_grad());
  CHECK(scale(w, 2).requires_grad());
}

TEST_CASE("broadcast and shape rules") {
  const Tensor m = Tensor::matrix(2, 2, {1, 2, 3, 4});
  const Tensor v = Tensor::vector({10, 20});
  const Tensor r = add(m, v);
  CHECK(std::vector<Real>(r.values().begin(), r.values().end()) == std::vector<Real>{11, 22, 13, 24});
  CHECK_THROWS_AS(add(m, Tensor::vector({1, 2, 3})), DimensionError);
  CHECK_THROWS_AS(mul(m, v), DimensionError);
  CHECK_THROWS_AS(Tensor(Shape{2, 2}, {1, 2, 3}), DimensionError);
}

TEST_CASE("zero-size tensors") {
  const Tensor empty = Tensor::zeros({0, 3});
  const Tensor x = Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6});
  const Tensor parts[] = {empty, x};
  const Tensor c = concat_rows(parts);
  CHECK(c.shape() == Shape{2, 3});
  CHECK(std::equal(c.values().begin(), c.values().end(), x.values().begin()));
}

TEST_CASE("concat and slice match index oracles") {
  auto rng = rng_for("concat");
  const Tensor a = random_matrix(rng, 2, 3);
  const Tensor b = random_matrix(rng, 4, 3);
  const Tensor rows[] = {a, b};
  const Tensor r = concat_rows(rows);
  for (std::size_t i = 0; i < 6; ++i) {
    for (std::size_t j = 0; j < 3; ++j) CHECK(r.at(i, j) == (i < 2 ? a.at(i, j) : b.at(i - 2, j)));
  }
  const Tensor c = random_matrix(rng, 2, 2);
  const Tensor cols[] = {a, c};
  const Tensor k = concat_cols(cols);
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 5; ++j) CHECK(k.at(i, j) == (j < 3 ? a.at(i, j) : c.at(i, j - 3)));
  }
  const Tensor s = slice_cols(k, 1, 3);
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 3; ++j) CHECK(s.at(i, j) == k.at(i, j + 1));
  }
}

TEST_CASE("every differentiable op passes finite differences") {
  auto rng = rng_for("fd");
  using Inputs = std::vector<Tensor>;
  const auto m34 = [&] { return random_matrix(rng, 3, 4, true); };
  const auto positive = [&] {
    std::vector<Real> v(12);
    for (auto& x : v) x = static_cast<Real>(0.5 + rng.uniform());
    return Tensor::matrix(3, 4, v, true);
  };
  // A fixed random weighting keeps every output entry in play.
  const Tensor mix = random_matrix(rng, 3, 4);
  const auto weigh = [&](const Tensor& t) { return sum(mul(t, mix)); };

  CHECK(max_fd_error({m34(), random_matrix(rng, 4, 2, true)},
                     [](Inputs& in) { return sum(tanh(matmul(in[0], in[1]))); }) < 1e-6);
  CHECK(max_fd_error({m34(), m34()}, [&](Inputs& in) { return weigh(add(in[0], in[1])); }) < 1e-6);
  CHECK(max_fd_error({m34(), testing::random_vector(rng, 4, true)},
                     [&](Inputs& in) { return weigh(sub(in[0], in[1])); }) < 1e-6);
  CHECK(max_fd_error({m34(), m34()}, [&](Inputs& in) { return weigh(mul(in[0], in[1])); }) < 1e-6);
  CHECK(max_fd_error({m34()}, [&](Inputs& in) { return weigh(scale(in[0], -1.7)); }) < 1e-6);
  CHECK(max_fd_error({positive()}, [&](Inputs& in) { return weigh(relu(in[0])); }) < 1e-6);
  CHECK(max_fd_error({m34()}, [&](Inputs& in) { return weigh(tanh(in[0])); }) < 1e-6);
  CHECK(max_fd_error({m34()}, [&](Inputs& in) { return weigh(sigmoid(in[0])); }) < 1e-6);
  CHECK(max_fd_error({positive()}, [&](Inputs& in) { return weigh(log(in[0])); }) < 1e-6);
  CHECK(max_fd_error({positive()}, [&](Inputs& in) { return weigh(clamp(in[0], 0.0, 10.0)); }) < 1e-6);
  CHECK(max_fd_error({m34()}, [&](Inputs& in) { return weigh(softmax_rows(in[0])); }) < 1e-6);
  CHECK(max_fd_error({m34()}, [&](Inputs& in) {
          return sum(mul(mean_rows(in[0]), Tensor::vector({1, -2, 3, 0.5})));
        }) < 1e-6);
  CHECK(max_fd_error({m34(), m34()}, [](Inputs& in) { return squared_difference_sum(in[0], in[1]); }) < 1e-6);
  CHECK(max_fd_error({m34()}, [&](Inputs& in) { return weigh(transpose(transpose(in[0]))); }) < 1e-6);
  CHECK(max_fd_error({m34()}, [&](Inputs& in) { return weigh(reshape(reshape(in[0], {4, 3}), {3, 4})); }) <
        1e-6);
  CHECK(max_fd_error({random_matrix(rng, 1, 4, true), random_matrix(rng, 2, 4, true)}, [&](Inputs& in) {
          const Tensor parts[] = {in[0], in[1]};
          return weigh(concat_rows(parts));
        }) < 1e-6);
  CHECK(max_fd_error({random_matrix(rng, 3, 1, true), random_matrix(rng, 3, 3, true)}, [&](Inputs& in) {
          const Tensor parts[] = {in[0], in[1]};
          return weigh(concat_cols(parts));
        }) < 1e-6);
  CHECK(max_fd_error({m34()}, [&](Inputs& in) { return sum(mul(slice_cols(in[0], 1, 2), slice_cols(mix, 0, 2))); }) <
        1e-6);
  CHECK(max_fd_error({m34()}, [&](Inputs& in) {
          const std::vector<std::size_t> idx{2, 0, 2};
          return sum(mul(gather_rows(in[0], idx), gather_rows(mix, idx)));
        }) < 1e-6);
}
