// SPDX-License-Identifier: Apache-2.0
#include "ainet/arc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ainet/errors.hpp"

namespace ainet {

NeighborMode parse_neighbor_mode(std::string_view name) {
  if (name == "wrap") return NeighborMode::Wrap;
  if (name == "self-last") return NeighborMode::SelfLast;
  throw ConfigError("unknown neighbor mode '" + std::string(name) + "' (expected wrap or self-last)");
}

std::string_view neighbor_mode_name(NeighborMode m) {
  return m == NeighborMode::Wrap ? "wrap" : "self-last";
}

Tensor fuse_anchors(const Tensor& region_latent, const AnchorSet& anchors) {
  if (anchors.size() == 0) return region_latent;
  if (anchors.features.cols() != region_latent.cols()) {
    throw DimensionError("fuse_anchors: anchor width " + std::to_string(anchors.features.cols()) +
                         " vs region width " + std::to_string(region_latent.cols()));
  }
  const Tensor parts[] = {anchors.features, region_latent};
  return concat_rows(parts);
}

std::size_t neighbor_of(std::size_t l, std::size_t count, NeighborMode mode) {
  if (l + 1 < count) return l + 1;
  return mode == NeighborMode::Wrap ? 0 : l;
}

namespace {

struct Attended {
  Tensor out;
  Tensor attention;
};

Attended attend(const Tensor& q, const Tensor& k, const Tensor& v, std::size_t key_dim) {
  const Real inv_sqrt = Real(1) / std::sqrt(static_cast<Real>(key_dim));
  Tensor attention = softmax_rows(scale(matmul(q, transpose(k)), inv_sqrt));
  Tensor out = matmul(attention, v);
  return {std::move(out), std::move(attention)};
}

struct Projected {
  Tensor q, k, v;
};

std::vector<Projected> project_all(std::span<const Tensor> fused, const ArcParams& p) {
  std::vector<Projected> out;
  out.reserve(fused.size());
  for (const auto& f : fused) out.push_back({matmul(f, p.wq), matmul(f, p.wk), matmul(f, p.wv)});
  return out;
}

}  // namespace

std::vector<Tensor> cross_attend(std::span<const Tensor> fused, const ArcParams& p) {
  if (fused.empty()) throw EmptyInputError("cross_attend: no regions");
  const auto proj = project_all(fused, p);
  const std::size_t dk = p.wk.cols();
  std::vector<Tensor> out;
  out.reserve(fused.size());
  for (std::size_t l = 0; l < fused.size(); ++l) {
    const std::size_t n = neighbor_of(l, fused.size(), p.neighbor);
    if (n == l) {
      out.push_back(attend(proj[l].q, proj[l].k, proj[l].v, dk).out);
      continue;
    }
    const Tensor keys[] = {proj[l].k, proj[n].k};
    const Tensor vals[] = {proj[l].v, proj[n].v};
    out.push_back(attend(proj[l].q, concat_rows(keys), concat_rows(vals), dk).out);
  }
  return out;
}

std::vector<Tensor> acf_attend(std::span<const Tensor> fused, const ArcParams& p) {
  const auto proj = project_all(fused, p);
  const std::size_t dk = p.wk.cols();
  std::vector<Tensor> out;
  out.reserve(fused.size());
  for (const auto& pr : proj) out.push_back(attend(pr.q, pr.k, pr.v, dk).out);
  return out;
}

namespace {

std::vector<Attended> mha_region(const Tensor& fused, const ArcParams& p, std::size_t heads) {
  const std::size_t d = p.wq.cols();
  if (heads == 0 || d % heads != 0) {
    throw ConfigError("mha_fuse: width " + std::to_string(d) + " is not divisible by " +
                      std::to_string(heads) + " heads");
  }
  const std::size_t dh = d / heads;
  const Tensor q = matmul(fused, p.wq);
  const Tensor k = matmul(fused, p.wk);
  const Tensor v = matmul(fused, p.wv);
  if (heads == 1) return {attend(q, k, v, dh)};
  std::vector<Attended> out;
  out.reserve(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    out.push_back(attend(slice_cols(q, h * dh, dh), slice_cols(k, h * dh, dh), slice_cols(v, h * dh, dh), dh));
  }
  return out;
}

}  // namespace

std::vector<Tensor> mha_fuse(std::span<const Tensor> fused, const ArcParams& p, std::size_t heads) {
  std::vector<Tensor> out;
  out.reserve(fused.size());
  for (const auto& f : fused) {
    auto per_head = mha_region(f, p, heads);
    if (per_head.size() == 1) {
      out.push_back(std::move(per_head[0].out));
      continue;
    }
    std::vector<Tensor> parts;
    parts.reserve(per_head.size());
    for (auto& h : per_head) parts.push_back(std::move(h.out));
    out.push_back(concat_cols(parts));
  }
  return out;
}

std::vector<std::vector<Tensor>> mha_attention_maps(std::span<const Tensor> fused, const ArcParams& p,
                                                    std::size_t heads) {
  std::vector<std::vector<Tensor>> maps;
  for (const auto& f : fused) {
    std::vector<Tensor> region;
    for (auto& h : mha_region(f, p, heads)) region.push_back(std::move(h.attention));
    maps.push_back(std::move(region));
  }
  return maps;
}

std::size_t masked_count(double ratio, std::size_t rows) {
  if (!(ratio >= 0.0 && ratio < 1.0)) throw ConfigError("mask ratio must lie in [0, 1)");
  if (rows == 0) return 0;
  const auto m = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(rows)));
  return std::min(m, rows - 1);
}

std::vector<std::size_t> surviving_rows(std::span<const Real> scores, double ratio) {
  const std::size_t drop = masked_count(ratio, scores.size());
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  // Lowest score first; on ties the higher index goes first.
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] != scores[b] ? scores[a] < scores[b] : a > b;
  });
  std::vector<std::size_t> kept(order.begin() + static_cast<std::ptrdiff_t>(drop), order.end());
  std::sort(kept.begin(), kept.end());
  return kept;
}

CorrectedRegion mask_low_attention(const Tensor& corrected, std::size_t anchor_rows,
                                   const PredictorParams& scorer, double ratio) {
  const auto scores = gated_score_values(corrected, scorer);
  CorrectedRegion out;
  out.rows = surviving_rows(scores, ratio);
  out.kept = out.rows.size() == corrected.rows() ? corrected : gather_rows(corrected, out.rows);
  out.from_anchor.reserve(out.rows.size());
  out.scores.reserve(out.rows.size());
  for (std::size_t r : out.rows) {
    out.from_anchor.push_back(r < anchor_rows);
    out.scores.push_back(scores[r]);
  }
  return out;
}

}  // namespace ainet
