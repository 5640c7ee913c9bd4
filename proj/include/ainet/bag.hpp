// SPDX-License-Identifier: Apache-2.0
//
// Bags of instance features, their spatial partition into regions, and the
// on-disk formats (.aifb feature files and the CSV manifest).
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ainet/tensor.hpp"

namespace ainet {

struct Coord {
  std::int32_t x = 0;
  std::int32_t y = 0;
  friend bool operator==(const Coord&, const Coord&) = default;
};

/// One slide: N instance feature rows (N x D), their patch-grid positions and
/// the bag-level class.
struct Bag {
  std::string id;
  Tensor features;
  std::vector<Coord> coords;
  int label = 0;

  std::size_t size() const { return coords.size(); }
  std::size_t dim() const { return features.cols(); }
};

/// L disjoint, spatially contiguous index lists covering [0, N).
struct RegionPartition {
  std::vector<std::vector<std::size_t>> regions;

  std::size_t count() const { return regions.size(); }
  std::size_t total() const;
};

/// Sorts instances along the Z-order curve of their coordinates (ties by
/// original index) and cuts the sequence into L near-equal chunks; the first
/// N mod L chunks get one extra instance. Throws PartitionError if N < L.
RegionPartition partition(const Bag& bag, std::size_t regions);

/// Instance order used by partition(), exposed for tests and tooling.
std::vector<std::size_t> morton_order(const std::vector<Coord>& coords);

// .aifb layout, little-endian:
//   "AIFB" | u32 version=1 | u32 N | u32 D | N x (i32 x, i32 y) | N*D float32 row-major
inline constexpr std::uint32_t kBagFileVersion = 1;

void write_bag_file(const Bag& bag, const std::filesystem::path& path);
/// The returned bag's id is the file stem and its label is 0; both come from
/// the manifest when loading a dataset.
Bag read_bag_file(const std::filesystem::path& path);

/// Encodes/decodes the .aifb byte image without touching the filesystem.
std::vector<std::uint8_t> encode_bag(const Bag& bag);
Bag decode_bag(const std::vector<std::uint8_t>& bytes);

struct ManifestRecord {
  std::string bag_id;
  std::filesystem::path path;  // resolved against the manifest's directory
  int label = 0;
};

/// Reads a `bag_id,path,label` CSV; labels must lie in [0, n_classes).
std::vector<ManifestRecord> read_manifest(const std::filesystem::path& path, int n_classes);
void write_manifest(const std::filesystem::path& path, const std::vector<ManifestRecord>& records);

/// Reads the bag file of `record` and applies its id and label.
Bag load_bag(const ManifestRecord& record);

}  // namespace ainet
