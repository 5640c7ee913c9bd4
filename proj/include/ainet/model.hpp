// SPDX-License-Identifier: Apache-2.0
//
// The full pipeline: parameters, hyperparameters, the per-variant forward
// pass with its three losses, and the .aipm parameter file.
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "ainet/arc.hpp"
#include "ainet/bag.hpp"
#include "ainet/dam.hpp"
#include "ainet/optim.hpp"
#include "ainet/predictor.hpp"

namespace ainet {

/// Ablation arms: which of anchor mining / correction / masking run.
enum class Variant {
  Baseline,  // regions straight into the predictor
  Dam,       // anchors appended to every region, no attention correction
  DamMha,    // anchors + multi-head self-attention per region, no mask
  DamAcf,    // anchors + single-head self-attention per region + mask
  Full,      // anchors + cross-region attention + mask
};

Variant parse_variant(std::string_view name);
std::string_view variant_name(Variant v);

struct TrainConfig {
  std::size_t epochs = 100;
  AdamWConfig optim;
  std::size_t regions = 4;
  double k_percent = 20.0;
  double mask_ratio = 0.9;
  double alpha = 0.7;
  std::uint64_t seed = 42;
  Variant variant = Variant::Full;
  Selector selector = Selector::Dam;
  NeighborMode neighbor = NeighborMode::Wrap;
  std::size_t heads = 4;
  std::size_t hidden = 128;
  int classes = 2;
};

/// Throws ConfigError for out-of-range hyperparameters.
void validate(const TrainConfig& cfg);

struct ModelParams {
  DamParams dam;
  ArcParams arc;
  PredictorParams pred;

  std::size_t dim() const { return dam.w1.rows(); }

  struct Named {
    std::string name;
    Tensor* tensor;
    bool decay;
  };
  /// Every learnable tensor in a fixed order.
  std::vector<Named> named();
  std::vector<ParamRef> trainable();
  void zero_grad();
};

/// Weights ~ U(+-sqrt(6 / (fan_in + fan_out))), biases zero, drawn from the
/// "init" substream of cfg.seed.
ModelParams init_model(std::size_t dim, const TrainConfig& cfg);

/// Deep copy without any graph history.
ModelParams clone(const ModelParams& params);

struct ForwardPass {
  Tensor latent;                            // undefined for the baseline
  AnchorSet anchors;
  std::vector<Tensor> fused;                // [anchors; region] per region
  std::vector<CorrectedRegion> corrected;   // masked variants only
  std::vector<Tensor> predictor_inputs;     // what each region head pooled
  Prediction prediction;
  Tensor loss_mse;
  Tensor loss_region;
  Tensor loss_bag;
  Tensor loss_total;
};

/// Forward pass for cfg.variant on one bag, including all losses.
ForwardPass forward(const ModelParams& params, const Bag& bag, const RegionPartition& part,
                    const TrainConfig& cfg);

/// Bag-level class probabilities with no tape recorded.
std::vector<double> predict_bag(const ModelParams& params, const Bag& bag, const RegionPartition& part,
                                const TrainConfig& cfg);

// ---- .aipm -----------------------------------------------------------------
// "AIPM" | u32 version=1 | u32 count | per tensor: u32 name_len, name bytes,
// u32 rank, u32 dims[rank], float64 values. Little-endian.

inline constexpr std::uint32_t kModelFileVersion = 1;

struct NamedTensor {
  std::string name;
  std::vector<std::uint32_t> dims;
  std::vector<double> values;
};

std::vector<std::uint8_t> encode_tensors(const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> decode_tensors(const std::vector<std::uint8_t>& bytes);

/// Parameters plus the hyperparameters needed to re-run the forward pass,
/// the latter stored as rank-0 "meta.*" entries.
std::vector<NamedTensor> model_to_tensors(const ModelParams& params, const TrainConfig& cfg);
ModelParams model_from_tensors(const std::vector<NamedTensor>& tensors, TrainConfig& cfg);

void write_model(const std::filesystem::path& path, const ModelParams& params, const TrainConfig& cfg);
ModelParams read_model(const std::filesystem::path& path, TrainConfig& cfg);

}  // namespace ainet
