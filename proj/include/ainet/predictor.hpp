// SPDX-License-Identifier: Apache-2.0
//
// Gated-attention MIL head. One scorer w^T (tanh(V^T f) * sigmoid(U^T f))
// serves three roles: pooling weights for the region heads, pooling weights
// for the bag head, and the ranking used by the region-correction mask.
#pragma once

#include <vector>

#include "ainet/tensor.hpp"

namespace ainet {

struct PredictorParams {
  Tensor attn_v;      // D x H
  Tensor attn_u;      // D x H
  Tensor attn_w;      // H x 1
  Tensor classifier;  // D x C
  Tensor bias;        // C

  std::size_t hidden() const { return attn_v.cols(); }
  std::size_t classes() const { return classifier.cols(); }
};

/// Raw (pre-softmax) scores, S x 1. Differentiable.
Tensor gated_scores(const Tensor& feats, const PredictorParams& p);

/// Raw scores as plain values without recording a tape.
std::vector<Real> gated_score_values(const Tensor& feats, const PredictorParams& p);

/// Softmax of the raw scores, returned as a 1 x S row.
Tensor attention_weights(const Tensor& feats, const PredictorParams& p);

struct Prediction {
  Tensor region_probs;  // L x C
  Tensor bag_probs;     // 1 x C
};

/// Region l pools its own kept rows; the bag head pools the union of every
/// region's rows. Both heads share the scorer and the classifier.
Prediction predict(std::span<const Tensor> regions, const PredictorParams& p);

}  // namespace ainet
