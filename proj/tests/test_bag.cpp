// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <set>

#include "ainet/bag.hpp"
#include "ainet/errors.hpp"
#include "ainet/morton.hpp"
#include "support.hpp"

using namespace ainet;

namespace {

// Bit-by-bit interleave, independent of the mask-and-shift implementation.
std::uint64_t slow_morton(std::uint32_t x, std::uint32_t y) {
  std::uint64_t key = 0;
  for (int b = 0; b < 32; ++b) {
    key |= static_cast<std::uint64_t>((x >> b) & 1u) << (2 * b);
    key |= static_cast<std::uint64_t>((y >> b) & 1u) << (2 * b + 1);
  }
  return key;
}

std::vector<std::size_t> sizes(const RegionPartition& p) {
  std::vector<std::size_t> s;
  for (const auto& r : p.regions) s.push_back(r.size());
  return s;
}

Bag small_bag(std::size_t n, std::size_t d = 2) {
  CounterRng rng(substream_key(5, "small-bag", n));
  return testing::grid_bag(rng, n, d, 4);
}

}  // namespace

TEST_CASE("morton key matches a bitwise interleave") {
  CounterRng rng(substream_key(9, "morton"));
  for (int i = 0; i < 1000; ++i) {
    const auto x = static_cast<std::uint32_t>(rng.next_u64());
    const auto y = static_cast<std::uint32_t>(rng.next_u64());
    CHECK(morton_key(x, y) == slow_morton(x, y));
  }
}

TEST_CASE("morton order of a 2x2 block") {
  const std::vector<Coord> coords{{0, 0}, {1, 1}, {0, 1}, {1, 0}};
  const auto order = morton_order(coords);
  std::vector<Coord> sorted;
  for (auto i : order) sorted.push_back(coords[i]);
  CHECK(sorted == std::vector<Coord>{{0, 0}, {1, 0}, {0, 1}, {1, 1}});
}

TEST_CASE("morton order handles negatives and ties by index") {
  const std::vector<Coord> coords{{-1, -1}, {-2, -2}, {-1, -1}, {-2, -1}};
  // Offsets by the minimum (-2,-2): keys (1,1)=3, (0,0)=0, (1,1)=3, (0,1)=2.
  CHECK(morton_order(coords) == std::vector<std::size_t>{1, 3, 0, 2});
}

TEST_CASE("partition split sizes") {
  CHECK(sizes(partition(small_bag(8), 4)) == std::vector<std::size_t>{2, 2, 2, 2});
  CHECK(sizes(partition(small_bag(10), 4)) == std::vector<std::size_t>{3, 3, 2, 2});
  CHECK_THROWS_AS(partition(small_bag(3), 4), PartitionError);
}

TEST_CASE("partition covers every instance once, in morton order") {
  const Bag bag = small_bag(37);
  const auto part = partition(bag, 5);
  std::vector<std::size_t> flat;
  for (const auto& r : part.regions) flat.insert(flat.end(), r.begin(), r.end());
  CHECK(flat == morton_order(bag.coords));
  std::set<std::size_t> unique(flat.begin(), flat.end());
  CHECK(unique.size() == 37);
  const auto s = sizes(part);
  CHECK(*std::max_element(s.begin(), s.end()) - *std::min_element(s.begin(), s.end()) <= 1);
  CHECK(part.total() == 37);
}

TEST_CASE("partition is invariant to instance order") {
  const Bag bag = small_bag(23);
  const auto base = partition(bag, 3);
  std::vector<std::size_t> perm(23);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  CounterRng rng(substream_key(3, "perm"));
  rng.shuffle(std::span<std::size_t>(perm));
  Bag shuffled = bag;
  shuffled.features = gather_rows(bag.features, perm);
  shuffled.coords.clear();
  for (auto i : perm) shuffled.coords.push_back(bag.coords[i]);
  const auto moved = partition(shuffled, 3);
  for (std::size_t l = 0; l < 3; ++l) {
    std::vector<std::size_t> original;
    for (auto i : moved.regions[l]) original.push_back(perm[i]);
    CHECK(original == base.regions[l]);
  }
}

TEST_CASE("bag file layout and round trip") {
  Bag one;
  one.features = Tensor::matrix(1, 1, {0.5});
  one.coords = {{3, -4}};
  const auto bytes = encode_bag(one);
  CHECK(bytes.size() == 28);
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "AIFB");

  const auto dir = testing::scratch_dir("bagfile");
  const Bag bag = small_bag(9, 3);
  write_bag_file(bag, dir / "b.aifb");
  const Bag back = read_bag_file(dir / "b.aifb");
  CHECK(back.id == "b");
  CHECK(back.coords == bag.coords);
  write_bag_file(back, dir / "c.aifb");
  CHECK(testing::read_bytes(dir / "b.aifb") == testing::read_bytes(dir / "c.aifb"));
}

TEST_CASE("bag file errors are distinct") {
  Bag one;
  one.features = Tensor::matrix(1, 2, {0.5, 1.5});
  one.coords = {{0, 0}};
  const auto good = encode_bag(one);

  auto expect_kind = [](const std::vector<std::uint8_t>& bytes, FormatError::Kind kind) {
    try {
      decode_bag(bytes);
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      CHECK(e.kind() == kind);
    }
  };
  auto bad_magic = good;
  std::copy_n("XXXX", 4, bad_magic.begin());
  expect_kind(bad_magic, FormatError::Kind::BadMagic);
  auto bad_version = good;
  bad_version[4] = 2;
  expect_kind(bad_version, FormatError::Kind::BadVersion);
  expect_kind({good.begin(), good.end() - 1}, FormatError::Kind::Truncated);
  auto trailing = good;
  trailing.push_back(0);
  expect_kind(trailing, FormatError::Kind::TrailingData);
  auto nan = good;
  // Last float: 0x7fc00000 little-endian.
  nan[nan.size() - 4] = 0x00;
  nan[nan.size() - 3] = 0x00;
  nan[nan.size() - 2] = 0xc0;
  nan[nan.size() - 1] = 0x7f;
  expect_kind(nan, FormatError::Kind::NonFinite);
}

TEST_CASE("manifest parsing") {
  const auto dir = testing::scratch_dir("manifest");
  testing::write_text(dir / "empty.csv", "bag_id,path,label\n");
  CHECK(read_manifest(dir / "empty.csv", 2).empty());

  testing::write_text(dir / "one.csv", "bag_id,path,label\r\nb1,b1.aifb,0\r\n");
  const auto one = read_manifest(dir / "one.csv", 2);
  REQUIRE(one.size() == 1);
  CHECK(one[0].bag_id == "b1");
  CHECK(one[0].path == dir / "b1.aifb");
  CHECK(one[0].label == 0);

  auto expect_kind = [&](const std::string& text, ManifestError::Kind kind) {
    testing::write_text(dir / "bad.csv", text);
    try {
      read_manifest(dir / "bad.csv", 2);
      FAIL("expected ManifestError");
    } catch (const ManifestError& e) {
      CHECK(e.kind() == kind);
    }
  };
  expect_kind("bag_id,path,label\nb1,b1.aifb,2\n", ManifestError::Kind::LabelRange);
  expect_kind("bag_id,path,label\nb1,b1.aifb,0\nb1,b2.aifb,1\n", ManifestError::Kind::DuplicateId);
  expect_kind("id,path,label\n", ManifestError::Kind::BadHeader);
  expect_kind("bag_id,path,label\nb1,b1.aifb\n", ManifestError::Kind::BadRow);
  try {
    read_manifest(dir / "missing.csv", 2);
    FAIL("expected ManifestError");
  } catch (const ManifestError& e) {
    CHECK(e.kind() == ManifestError::Kind::MissingFile);
  }
}

TEST_CASE("manifest write then read") {
  const auto dir = testing::scratch_dir("manifest_rt");
  const std::vector<ManifestRecord> records{{"a", dir / "a.aifb", 1}, {"b", dir / "sub" / "b.aifb", 0}};
  write_manifest(dir / "m.csv", records);
  const auto bytes = testing::read_bytes(dir / "m.csv");
  CHECK(std::string(bytes.begin(), bytes.end()) == "bag_id,path,label\na,a.aifb,1\nb,sub/b.aifb,0\n");
  const auto back = read_manifest(dir / "m.csv", 2);
  REQUIRE(back.size() == 2);
  CHECK(back[1].path == dir / "sub" / "b.aifb");
}
