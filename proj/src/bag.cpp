// SPDX-License-Identifier: Apache-2.0
#include "ainet/bag.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "ainet/errors.hpp"
#include "ainet/morton.hpp"

namespace ainet {

namespace fs = std::filesystem;

std::size_t RegionPartition::total() const {
  std::size_t n = 0;
  for (const auto& r : regions) n += r.size();
  return n;
}

std::vector<std::size_t> morton_order(const std::vector<Coord>& coords) {
  std::vector<std::size_t> order(coords.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (coords.empty()) return order;
  std::int64_t min_x = std::numeric_limits<std::int64_t>::max();
  std::int64_t min_y = min_x;
  for (const auto& c : coords) {
    min_x = std::min<std::int64_t>(min_x, c.x);
    min_y = std::min<std::int64_t>(min_y, c.y);
  }
  std::vector<std::uint64_t> keys(coords.size());
  for (std::size_t i = 0; i < coords.size(); ++i) {
    // Offsets fit in 32 bits since the i32 range spans 2^32 values.
    const auto dx = static_cast<std::uint32_t>(coords[i].x - min_x);
    const auto dy = static_cast<std::uint32_t>(coords[i].y - min_y);
    keys[i] = morton_key(dx, dy);
  }
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return keys[a] != keys[b] ? keys[a] < keys[b] : a < b;
  });
  return order;
}

RegionPartition partition(const Bag& bag, std::size_t regions) {
  const std::size_t n = bag.size();
  if (regions == 0) throw PartitionError("partition: region count must be positive");
  if (n < regions) {
    throw PartitionError("partition: bag '" + bag.id + "' has " + std::to_string(n) +
                         " instances, fewer than " + std::to_string(regions) + " regions");
  }
  const auto order = morton_order(bag.coords);
  const std::size_t base = n / regions;
  const std::size_t extra = n % regions;
  RegionPartition part;
  part.regions.reserve(regions);
  std::size_t pos = 0;
  for (std::size_t l = 0; l < regions; ++l) {
    const std::size_t len = base + (l < extra ? 1 : 0);
    part.regions.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(pos),
                              order.begin() + static_cast<std::ptrdiff_t>(pos + len));
    pos += len;
  }
  return part;
}

// ---- .aifb -----------------------------------------------------------------

namespace {

constexpr char kBagMagic[4] = {'A', 'I', 'F', 'B'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  std::uint32_t u32(const char* what) {
    if (bytes_.size() - pos_ < 4) {
      throw FormatError(FormatError::Kind::Truncated,
                        std::string("bag file truncated while reading ") + what);
    }
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_bag(const Bag& bag) {
  const std::size_t n = bag.size();
  const std::size_t d = n == 0 ? 0 : bag.dim();
  if (bag.features.defined() && (bag.features.rows() != n || bag.features.numel() != n * d)) {
    throw DimensionError("bag '" + bag.id + "': features " + shape_string(bag.features.shape()) +
                         " do not match " + std::to_string(n) + " coordinates");
  }
  if (n > std::numeric_limits<std::uint32_t>::max() || d > std::numeric_limits<std::uint32_t>::max()) {
    throw FormatError(FormatError::Kind::BadField, "bag too large for the .aifb header");
  }
  std::vector<std::uint8_t> out;
  out.reserve(16 + n * 8 + n * d * 4);
  out.insert(out.end(), std::begin(kBagMagic), std::end(kBagMagic));
  put_u32(out, kBagFileVersion);
  put_u32(out, static_cast<std::uint32_t>(n));
  put_u32(out, static_cast<std::uint32_t>(d));
  for (const auto& c : bag.coords) {
    put_u32(out, std::bit_cast<std::uint32_t>(c.x));
    put_u32(out, std::bit_cast<std::uint32_t>(c.y));
  }
  if (n > 0) {
    for (Real v : bag.features.values()) {
      const float f = static_cast<float>(v);
      if (!std::isfinite(f)) {
        throw FormatError(FormatError::Kind::NonFinite,
                          "bag '" + bag.id + "' holds a non-finite feature value");
      }
      put_u32(out, std::bit_cast<std::uint32_t>(f));
    }
  }
  return out;
}

Bag decode_bag(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4) throw FormatError(FormatError::Kind::Truncated, "bag file shorter than its magic");
  if (!std::equal(std::begin(kBagMagic), std::end(kBagMagic), bytes.begin())) {
    throw FormatError(FormatError::Kind::BadMagic, "bag file has bad magic (expected AIFB)");
  }
  Reader in(bytes);
  in.u32("magic");
  const std::uint32_t version = in.u32("version");
  if (version != kBagFileVersion) {
    throw FormatError(FormatError::Kind::BadVersion,
                      "bag file version " + std::to_string(version) + " is not supported");
  }
  const std::uint64_t n = in.u32("N");
  const std::uint64_t d = in.u32("D");
  const std::uint64_t payload = n * 8 + n * d * 4;
  if (in.remaining() < payload) {
    throw FormatError(FormatError::Kind::Truncated,
                      "bag file payload truncated: need " + std::to_string(payload) + " bytes, have " +
                          std::to_string(in.remaining()));
  }
  if (in.remaining() > payload) {
    throw FormatError(FormatError::Kind::TrailingData, "bag file has trailing bytes after payload");
  }
  Bag bag;
  bag.coords.resize(n);
  for (auto& c : bag.coords) {
    c.x = std::bit_cast<std::int32_t>(in.u32("x"));
    c.y = std::bit_cast<std::int32_t>(in.u32("y"));
  }
  std::vector<Real> values(n * d);
  for (auto& v : values) {
    const float f = std::bit_cast<float>(in.u32("feature"));
    if (!std::isfinite(f)) {
      throw FormatError(FormatError::Kind::NonFinite, "bag file holds a non-finite feature value");
    }
    v = static_cast<Real>(f);
  }
  bag.features = Tensor::matrix(n, d, std::move(values));
  return bag;
}

void write_bag_file(const Bag& bag, const fs::path& path) {
  const auto bytes = encode_bag(bag);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError(FormatError::Kind::Io, "cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError(FormatError::Kind::Io, "failed writing '" + path.string() + "'");
}

Bag read_bag_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(FormatError::Kind::Io, "cannot open bag file '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    Bag bag = decode_bag(bytes);
    bag.id = path.stem().string();
    return bag;
  } catch (const FormatError& e) {
    throw FormatError(e.kind(), path.string() + ": " + e.what());
  }
}

// ---- manifest --------------------------------------------------------------

namespace {

constexpr const char* kManifestHeader = "bag_id,path,label";

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

}  // namespace

std::vector<ManifestRecord> read_manifest(const fs::path& path, int n_classes) {
  std::ifstream in(path);
  if (!in) {
    throw ManifestError(ManifestError::Kind::MissingFile, "cannot open manifest '" + path.string() + "'");
  }
  std::string line;
  if (!std::getline(in, line) || strip_cr(line) != kManifestHeader) {
    throw ManifestError(ManifestError::Kind::BadHeader,
                        path.string() + ": header must be exactly '" + kManifestHeader + "'");
  }
  const fs::path base = path.parent_path();
  std::vector<ManifestRecord> records;
  std::unordered_set<std::string> ids;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto where = path.string() + ":" + std::to_string(line_no);
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 3 || fields[0].empty() || fields[1].empty()) {
      throw ManifestError(ManifestError::Kind::BadRow, where + ": expected bag_id,path,label");
    }
    int label = 0;
    std::size_t used = 0;
    try {
      label = std::stoi(fields[2], &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != fields[2].size()) {
      throw ManifestError(ManifestError::Kind::BadRow, where + ": label '" + fields[2] + "' is not an integer");
    }
    if (label < 0 || label >= n_classes) {
      throw ManifestError(ManifestError::Kind::LabelRange,
                          where + ": label " + std::to_string(label) + " outside [0, " +
                              std::to_string(n_classes) + ")");
    }
    if (!ids.insert(fields[0]).second) {
      throw ManifestError(ManifestError::Kind::DuplicateId, where + ": duplicate bag_id '" + fields[0] + "'");
    }
    records.push_back({fields[0], base / fields[1], label});
  }
  return records;
}

void write_manifest(const fs::path& path, const std::vector<ManifestRecord>& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError(FormatError::Kind::Io, "cannot open '" + path.string() + "' for writing");
  const fs::path base = path.parent_path();
  out << kManifestHeader << '\n';
  for (const auto& r : records) {
    fs::path rel = base.empty() ? r.path : r.path.lexically_relative(base);
    if (rel.empty()) rel = r.path;
    out << r.bag_id << ',' << rel.generic_string() << ',' << r.label << '\n';
  }
  if (!out) throw FormatError(FormatError::Kind::Io, "failed writing '" + path.string() + "'");
}

Bag load_bag(const ManifestRecord& record) {
  Bag bag = read_bag_file(record.path);
  bag.id = record.bag_id;
  bag.label = record.label;
  return bag;
}

}  // namespace ainet
