// SPDX-License-Identifier: Apache-2.0
#include "ainet/dam.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ainet/errors.hpp"

namespace ainet {

Tensor project(const Tensor& features, const DamParams& p) {
  return add(matmul(relu(add(matmul(features, p.w1), p.b1)), p.w2), p.b2);
}

Embeddings embeddings(const Tensor& latent, const RegionPartition& part) {
  if (part.total() != latent.rows()) {
    throw DimensionError("embeddings: partition covers " + std::to_string(part.total()) +
                         " instances, latent has " + std::to_string(latent.rows()));
  }
  Embeddings emb;
  emb.bag = mean_rows(latent);
  emb.region.reserve(part.count());
  for (const auto& region : part.regions) emb.region.push_back(mean_rows(gather_rows(latent, region)));
  return emb;
}

std::vector<Real> anchor_weights(const Tensor& latent, const RegionPartition& part, const Embeddings& emb,
                                 double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("anchor_weights: alpha must lie in [0, 1]");
  const std::size_t d = latent.cols();
  const auto values = latent.values();
  const Real a = static_cast<Real>(alpha);
  const Real b = static_cast<Real>(1.0 - alpha);
  std::vector<Real> w(latent.rows());
  for (std::size_t l = 0; l < part.count(); ++l) {
    for (std::size_t i : part.regions[l]) {
      const std::span<const Real> row(values.data() + i * d, d);
      const Real local = cosine(row, emb.region[l].values());
      const Real global = cosine(row, emb.bag.values());
      w[i] = a * local + b * global;
    }
  }
  return w;
}

std::size_t anchor_count(double k_percent, std::size_t n) {
  if (!(k_percent >= 0.0 && k_percent <= 100.0)) {
    throw ConfigError("anchor count: k_percent must lie in [0, 100]");
  }
  // k * n is exact for integral k, so exact multiples of 100 do not round down.
  const double t = std::floor(k_percent * static_cast<double>(n) / 100.0);
  return std::min(n, static_cast<std::size_t>(std::max(0.0, t)));
}

std::vector<std::size_t> top_k_indices(std::span<const Real> weights, std::size_t count) {
  count = std::min(count, weights.size());
  std::vector<std::size_t> idx(weights.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(count), idx.end(),
                    [&](std::size_t a, std::size_t b) {
                      return weights[a] != weights[b] ? weights[a] > weights[b] : a < b;
                    });
  idx.resize(count);
  return idx;
}

AnchorSet select_anchors(const Tensor& latent, std::span<const Real> weights, double k_percent) {
  if (weights.size() != latent.rows()) {
    throw DimensionError("select_anchors: " + std::to_string(weights.size()) + " weights for " +
                         std::to_string(latent.rows()) + " instances");
  }
  AnchorSet set;
  set.indices = top_k_indices(weights, anchor_count(k_percent, weights.size()));
  set.features = gather_rows(latent, set.indices);
  set.weights.reserve(set.indices.size());
  for (std::size_t i : set.indices) set.weights.push_back(weights[i]);
  return set;
}

Selector parse_selector(std::string_view name) {
  if (name == "dam") return Selector::Dam;
  if (name == "attention") return Selector::Attention;
  if (name == "maxpool") return Selector::MaxPool;
  if (name == "bag") return Selector::Bag;
  if (name == "region") return Selector::Region;
  throw ConfigError("unknown selector '" + std::string(name) +
                    "' (expected dam, attention, maxpool, bag or region)");
}

std::string_view selector_name(Selector s) {
  switch (s) {
    case Selector::Dam: return "dam";
    case Selector::Attention: return "attention";
    case Selector::MaxPool: return "maxpool";
    case Selector::Bag: return "bag";
    case Selector::Region: return "region";
  }
  return "dam";
}

std::vector<Real> selector_scores(Selector mode, const Tensor& latent, const RegionPartition& part,
                                  const Embeddings& emb, double alpha, const PredictorParams& scorer) {
  switch (mode) {
    case Selector::Dam: return anchor_weights(latent, part, emb, alpha);
    case Selector::Bag: return anchor_weights(latent, part, emb, 0.0);
    case Selector::Region: return anchor_weights(latent, part, emb, 1.0);
    case Selector::Attention: return gated_score_values(latent, scorer);
    case Selector::MaxPool: {
      const std::size_t d = latent.cols();
      const auto values = latent.values();
      std::vector<Real> out(latent.rows());
      for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = *std::max_element(values.begin() + static_cast<std::ptrdiff_t>(i * d),
                                   values.begin() + static_cast<std::ptrdiff_t>((i + 1) * d));
      }
      return out;
    }
  }
  throw ConfigError("unknown selector");
}

}  // namespace ainet
