// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "ainet/errors.hpp"
#include "ainet/predictor.hpp"
#include "support.hpp"

using namespace ainet;
using testing::random_matrix;

namespace {

PredictorParams random_head(CounterRng& rng, std::size_t d, std::size_t h, std::size_t c) {
  return {random_matrix(rng, d, h, true), random_matrix(rng, d, h, true), random_matrix(rng, h, 1, true),
          random_matrix(rng, d, c, true), testing::random_vector(rng, c, true)};
}

double sigmoid(double x) { return 1 / (1 + std::exp(-x)); }

}  // namespace

TEST_CASE("gated scores match a scalar oracle") {
  const Tensor f = Tensor::matrix(2, 2, {0.5, -1, 2, 0.25});
  const PredictorParams p{Tensor::matrix(2, 2, {1, 0.5, -0.5, 2}), Tensor::matrix(2, 2, {0.3, -1, 1, 0.2}),
                          Tensor::matrix(2, 1, {0.7, -1.3}), Tensor::zeros({2, 2}), Tensor::zeros({2})};
  const Tensor s = gated_scores(f, p);
  REQUIRE(s.shape() == Shape{2, 1});
  for (std::size_t i = 0; i < 2; ++i) {
    double score = 0;
    for (std::size_t h = 0; h < 2; ++h) {
      double v = 0, u = 0;
      for (std::size_t k = 0; k < 2; ++k) {
        v += f.at(i, k) * p.attn_v.at(k, h);
        u += f.at(i, k) * p.attn_u.at(k, h);
      }
      score += p.attn_w.at(h, 0) * std::tanh(v) * sigmoid(u);
    }
    CHECK(std::abs(s[i] - score) < 1e-12);
    CHECK(gated_score_values(f, p)[i] == s[i]);
  }
}

TEST_CASE("attention weights") {
  CounterRng rng(substream_key(11, "att"));
  const auto p = random_head(rng, 3, 4, 2);
  CHECK(attention_weights(random_matrix(rng, 1, 3), p).item() == 1.0);
  const Tensor same = Tensor::matrix(3, 3, {1, 2, 3, 1, 2, 3, 1, 2, 3});
  const Tensor flat = attention_weights(same, p);
  for (Real w : flat.values()) CHECK(std::abs(w - 1.0 / 3) < 1e-15);
  CHECK_THROWS_AS(gated_scores(Tensor::zeros({0, 3}), p), EmptyInputError);
}

TEST_CASE("predict heads") {
  CounterRng rng(substream_key(12, "predict"));
  auto p = random_head(rng, 3, 5, 3);
  const Tensor region = random_matrix(rng, 4, 3);
  const std::vector<Tensor> single{region};
  const auto one = predict(single, p);
  for (std::size_t c = 0; c < 3; ++c) CHECK(std::abs(one.region_probs.at(0, c) - one.bag_probs.at(0, c)) < 1e-15);

  const std::vector<Tensor> regions{random_matrix(rng, 2, 3), random_matrix(rng, 5, 3), random_matrix(rng, 1, 3)};
  const auto pred = predict(regions, p);
  CHECK(pred.region_probs.shape() == Shape{3, 3});
  CHECK(pred.bag_probs.shape() == Shape{1, 3});
  for (std::size_t r = 0; r < 3; ++r) {
    double s = 0;
    for (std::size_t c = 0; c < 3; ++c) s += pred.region_probs.at(r, c);
    CHECK(std::abs(s - 1) < 1e-9);
  }

  PredictorParams zero = p;
  zero.classifier = Tensor::zeros({3, 3});
  zero.bias = Tensor::zeros({3});
  const Tensor even = predict(regions, zero).bag_probs;
  for (Real v : even.values()) CHECK(std::abs(v - 1.0 / 3) < 1e-15);

  const std::vector<Tensor> none;
  CHECK_THROWS_AS(predict(none, p), EmptyInputError);
}

TEST_CASE("region pooling is permutation invariant") {
  CounterRng rng(substream_key(13, "perm"));
  const auto p = random_head(rng, 3, 4, 2);
  const Tensor a = random_matrix(rng, 5, 3);
  const std::vector<std::size_t> perm{3, 0, 4, 2, 1};
  const std::vector<Tensor> r1{a}, r2{gather_rows(a, perm)};
  const auto p1 = predict(r1, p), p2 = predict(r2, p);
  for (std::size_t c = 0; c < 2; ++c) CHECK(std::abs(p1.region_probs.at(0, c) - p2.region_probs.at(0, c)) < 1e-12);
}

TEST_CASE("predictor gradients pass finite differences") {
  CounterRng rng(substream_key(14, "pgrad"));
  const auto p = random_head(rng, 3, 4, 2);
  const Tensor a = random_matrix(rng, 3, 3, true), b = random_matrix(rng, 2, 3, true);
  const Tensor mix = random_matrix(rng, 2, 2);
  const double err = testing::max_fd_error(
      {a, b, p.attn_v, p.attn_u, p.attn_w, p.classifier, p.bias}, [&](std::vector<Tensor>& in) {
        const PredictorParams q{in[2], in[3], in[4], in[5], in[6]};
        const std::vector<Tensor> regions{in[0], in[1]};
        const auto pr = predict(regions, q);
        return add(sum(mul(pr.region_probs, mix)), sum(log(pr.bag_probs)));
      });
  CHECK(err < 1e-6);
}
