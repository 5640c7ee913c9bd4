// SPDX-License-Identifier: Apache-2.0
//
// Synthetic weakly-labelled bags. Each bag mixes G Gaussian "morphologies"
// laid out as contiguous spatial blocks; bags of class c >= 1 additionally
// carry a sparse cluster of "tumor" instances, all inside one block, shifted
// along a class signature direction. A bag is class 0 exactly when it holds
// no tumor instance.
#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "ainet/bag.hpp"

namespace ainet {

struct SynthConfig {
  std::size_t n_bags = 200;
  std::size_t n_instances = 256;
  std::size_t dim = 32;
  int n_classes = 2;
  double tumor_rate = 0.05;
  std::size_t n_morphologies = 4;
  double noise_sigma = 0.5;
  std::uint64_t seed = 42;
};

/// Throws ConfigError on out-of-range fields, including n_classes > 1 + dim.
void validate(const SynthConfig& cfg);

/// Unit-norm, mutually orthogonal directions, one per positive class
/// (row c-1 belongs to class c). Fixed per run seed.
std::vector<std::vector<double>> class_signatures(const SynthConfig& cfg);

struct SyntheticBag {
  Bag bag;
  std::vector<std::uint8_t> tumor;  // 1 where the instance carries the signature
  std::size_t tumor_count() const;
};

/// Default class of bag `index` (round-robin over classes).
int default_label(const SynthConfig& cfg, std::size_t index);

/// Generates bag `index` with the given label. Output depends only on
/// (cfg, signatures, index, label), never on generation order.
SyntheticBag generate_bag(const SynthConfig& cfg, const std::vector<std::vector<double>>& signatures,
                          std::size_t index, int label);

/// Writes n_bags .aifb files plus manifest.csv into out_dir; returns the
/// manifest path.
std::filesystem::path generate_dataset(const SynthConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace ainet
