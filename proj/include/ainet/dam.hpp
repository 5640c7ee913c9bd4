// SPDX-License-Identifier: Apache-2.0
//
// Dual-level anchor mining: project instances through a small MLP, score
// each projected instance against its region's mean and the bag mean, and
// keep the top k% as anchors.
#pragma once

#include <string_view>
#include <vector>

#include "ainet/bag.hpp"
#include "ainet/predictor.hpp"
#include "ainet/tensor.hpp"

namespace ainet {

struct DamParams {
  Tensor w1;  // D x D
  Tensor b1;  // D
  Tensor w2;  // D x D
  Tensor b2;  // D
  double alpha = 0.7;
};

/// relu(features * W1 + b1) * W2 + b2
Tensor project(const Tensor& features, const DamParams& p);

struct Embeddings {
  Tensor bag;                  // D
  std::vector<Tensor> region;  // L x D
};

/// Mean-pooled bag embedding and one mean-pooled embedding per region.
Embeddings embeddings(const Tensor& latent, const RegionPartition& part);

/// alpha * cos(f, region mean) + (1 - alpha) * cos(f, bag mean) for every
/// instance, computed without gradient tracking.
std::vector<Real> anchor_weights(const Tensor& latent, const RegionPartition& part, const Embeddings& emb,
                                 double alpha);

struct AnchorSet {
  std::vector<std::size_t> indices;  // global instance indices, best first
  Tensor features;                   // T x D, rows of latent (differentiable)
  std::vector<Real> weights;         // non-increasing

  std::size_t size() const { return indices.size(); }
};

/// floor(k_percent / 100 * n), clamped to [0, n].
std::size_t anchor_count(double k_percent, std::size_t n);

/// Indices of the `count` largest weights; equal weights go to the lower
/// index first. Result is ordered best first.
std::vector<std::size_t> top_k_indices(std::span<const Real> weights, std::size_t count);

AnchorSet select_anchors(const Tensor& latent, std::span<const Real> weights, double k_percent);

enum class Selector { Dam, Attention, MaxPool, Bag, Region };

Selector parse_selector(std::string_view name);
std::string_view selector_name(Selector s);

/// Instance ranking scores for each selector arm. MaxPool scores an instance
/// by its largest latent coordinate; Attention uses the predictor's scorer.
std::vector<Real> selector_scores(Selector mode, const Tensor& latent, const RegionPartition& part,
                                  const Embeddings& emb, double alpha, const PredictorParams& scorer);

}  // namespace ainet
