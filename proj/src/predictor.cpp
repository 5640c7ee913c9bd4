// SPDX-License-Identifier: Apache-2.0
#include "ainet/predictor.hpp"

#include "ainet/errors.hpp"

namespace ainet {

Tensor gated_scores(const Tensor& feats, const PredictorParams& p) {
  if (feats.rank() != 2 || feats.rows() == 0) {
    throw EmptyInputError("gated_scores: need at least one feature row, got " + shape_string(feats.shape()));
  }
  const Tensor content = tanh(matmul(feats, p.attn_v));
  const Tensor gate = sigmoid(matmul(feats, p.attn_u));
  return matmul(mul(content, gate), p.attn_w);
}

std::vector<Real> gated_score_values(const Tensor& feats, const PredictorParams& p) {
  NoGradGuard no_grad;
  const Tensor s = gated_scores(feats, p);
  return {s.values().begin(), s.values().end()};
}

Tensor attention_weights(const Tensor& feats, const PredictorParams& p) {
  return softmax_rows(transpose(gated_scores(feats, p)));
}

namespace {

Tensor classify(const Tensor& feats, const Tensor& raw_scores, const PredictorParams& p) {
  const Tensor weights = softmax_rows(transpose(raw_scores));  // 1 x S
  const Tensor pooled = matmul(weights, feats);                 // 1 x D
  return softmax_rows(add(matmul(pooled, p.classifier), p.bias));
}

}  // namespace

Prediction predict(std::span<const Tensor> regions, const PredictorParams& p) {
  if (regions.empty()) throw EmptyInputError("predict: no regions");
  for (const auto& r : regions) {
    if (r.rank() != 2 || r.rows() == 0) {
      throw EmptyInputError("predict: every region needs at least one kept feature");
    }
  }
  // Raw scores are row-wise, so scoring the union once serves every head.
  const Tensor all = regions.size() == 1 ? regions[0] : concat_rows(regions);
  const Tensor all_scores = gated_scores(all, p);

  std::vector<Tensor> region_probs;
  region_probs.reserve(regions.size());
  std::size_t offset = 0;
  for (const auto& r : regions) {
    if (regions.size() == 1) {
      region_probs.push_back(classify(r, all_scores, p));
    } else {
      std::vector<std::size_t> rows(r.rows());
      for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = offset + i;
      region_probs.push_back(classify(r, gather_rows(all_scores, rows), p));
    }
    offset += r.rows();
  }
  Prediction out;
  out.region_probs = concat_rows(region_probs);
  out.bag_probs = classify(all, all_scores, p);
  return out;
}

}  // namespace ainet
