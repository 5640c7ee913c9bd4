// SPDX-License-Identifier: Apache-2.0
//
// Anchor-guided region correction: anchors are prepended to every region,
// each region's queries attend over its own keys/values and those of the next
// region, and the lowest-scoring corrected rows are masked out.
#pragma once

#include <string_view>
#include <vector>

#include "ainet/dam.hpp"
#include "ainet/predictor.hpp"
#include "ainet/tensor.hpp"

namespace ainet {

enum class NeighborMode {
  Wrap,      // the last region attends to region 0
  SelfLast,  // the last region attends only to itself
};

NeighborMode parse_neighbor_mode(std::string_view name);
std::string_view neighbor_mode_name(NeighborMode m);

/// Projections are shared by all regions (row convention: Q = X * Wq).
struct ArcParams {
  Tensor wq;  // D x D
  Tensor wk;  // D x D
  Tensor wv;  // D x D
  double mask_ratio = 0.9;
  NeighborMode neighbor = NeighborMode::Wrap;
};

/// [anchors; region rows] with anchors first.
Tensor fuse_anchors(const Tensor& region_latent, const AnchorSet& anchors);

/// Index of the region whose keys/values region l attends to besides its own.
std::size_t neighbor_of(std::size_t l, std::size_t count, NeighborMode mode);

/// softmax(Q_l [K_l; K_n]^T / sqrt(D)) [V_l; V_n] per region, n the
/// neighbor. When n == l this is plain self-attention over region l.
std::vector<Tensor> cross_attend(std::span<const Tensor> fused, const ArcParams& p);

/// Self-attention within each region only.
std::vector<Tensor> acf_attend(std::span<const Tensor> fused, const ArcParams& p);

/// Multi-head self-attention within each region. Head h uses columns
/// [h*D/heads, (h+1)*D/heads) of the shared projections; heads are
/// concatenated without an output projection.
std::vector<Tensor> mha_fuse(std::span<const Tensor> fused, const ArcParams& p, std::size_t heads);

/// Attention matrices (one per region) of the last mha_fuse-style pass,
/// exposed for tests.
std::vector<std::vector<Tensor>> mha_attention_maps(std::span<const Tensor> fused, const ArcParams& p,
                                                    std::size_t heads);

/// floor(ratio * rows), capped so that at least one row survives.
std::size_t masked_count(double ratio, std::size_t rows);

/// Row indices (ascending) that survive masking the `masked_count` lowest
/// scores; among equal scores the higher index is dropped first.
std::vector<std::size_t> surviving_rows(std::span<const Real> scores, double ratio);

struct CorrectedRegion {
  Tensor kept;                       // (T + Z - M) x D
  std::vector<std::size_t> rows;     // indices into the corrected region
  std::vector<bool> from_anchor;     // true for rows that came from the anchor block
  std::vector<Real> scores;          // raw scores of kept rows
};

CorrectedRegion mask_low_attention(const Tensor& corrected, std::size_t anchor_rows,
                                   const PredictorParams& scorer, double ratio);

}  // namespace ainet
