// SPDX-License-Identifier: Apache-2.0
//
// Flat key=value run configuration. One assignment per line, '#' starts a
// comment, blank lines are ignored, unknown keys and malformed values throw
// ConfigError naming the line.
//
//   key            default   meaning
//   epochs         100       passes over the training bags
//   lr             1e-4      AdamW learning rate
//   weight_decay   1e-5      decoupled decay on weight matrices
//   beta1          0.9
//   beta2          0.999
//   eps            1e-8
//   regions        4         L, spatial regions per bag
//   k_percent      20        share of instances kept as anchors
//   mask_ratio     0.9       r, share of fused rows dropped per region
//   alpha          0.7       region vs bag weight in anchor scoring
//   seed           42        training seed (init, shuffle, folds)
//   variant        full      baseline | dam | dam-mha | dam-acf | full
//   selector       dam       dam | attention | maxpool | bag | region
//   neighbor       wrap      wrap | self-last
//   heads          4         heads for dam-mha
//   hidden         128       gated attention width
//   classes        2         shared by training and generation
//   folds          5         cross-validation folds
//   bags           200       generator: bags
//   instances      256       generator: instances per bag
//   dim            32        generator: feature width
//   tumor_rate     0.05      generator: per-instance tumor probability
//   morphologies   4         generator: morphology clusters
//   noise          0.5       generator: feature noise sigma
//   data_seed      42        generator seed
#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "ainet/model.hpp"
#include "ainet/synth.hpp"

namespace ainet {

struct RunConfig {
  TrainConfig train;
  SynthConfig synth;
  std::size_t folds = 5;
};

/// Applies one assignment to cfg.
void set_config_value(RunConfig& cfg, std::string_view key, std::string_view value);

/// Parses config text on top of the given starting values.
RunConfig parse_config(std::string_view text, RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});

/// Text that parses back to cfg.
std::string format_config(const RunConfig& cfg);

}  // namespace ainet
