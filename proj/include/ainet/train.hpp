// SPDX-License-Identifier: Apache-2.0
//
// Bag-at-a-time training, fold splitting and cross-validation.
#pragma once

#include <filesystem>
#include <vector>

#include "ainet/bag.hpp"
#include "ainet/metrics.hpp"
#include "ainet/model.hpp"

namespace ainet {

struct EpochLog {
  std::size_t epoch = 0;
  double loss = 0.0;  // mean total loss over the epoch's bags
  double loss_bag = 0.0;
  double loss_region = 0.0;
  double loss_mse = 0.0;
  double train_accuracy = 0.0;  // from the forward pass before each update
};

struct TrainResult {
  ModelParams params;
  std::vector<EpochLog> log;
};

/// Reads every bag listed in the manifest records.
std::vector<Bag> load_bags(const std::vector<ManifestRecord>& records);

/// cfg.epochs passes over `bags`, each in a fresh order drawn from the
/// "shuffle" substream, one AdamW step per bag. Throws NumericError when a
/// loss turns non-finite.
TrainResult train(const std::vector<Bag>& bags, const TrainConfig& cfg);

void write_log_csv(const std::filesystem::path& path, const std::vector<EpochLog>& log);

std::vector<BagPrediction> predict_bags(const ModelParams& params, const std::vector<Bag>& bags,
                                        const TrainConfig& cfg);

struct FoldSplit {
  std::vector<Bag> train;
  std::vector<Bag> test;
};

/// Training and test bags of fold `fold` of `folds`, stratified and seeded
/// by `seed`.
FoldSplit split_fold(const std::vector<Bag>& bags, std::size_t folds, std::size_t fold, std::uint64_t seed);

/// Trains one model per fold (fold assignment seeded by cfg.seed) and
/// reports each on its held-out bags.
std::vector<FoldReport> cross_validate(const std::vector<Bag>& bags, const TrainConfig& cfg, std::size_t folds);

}  // namespace ainet
