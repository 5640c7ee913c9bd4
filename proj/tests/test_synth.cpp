// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <set>

#include "ainet/errors.hpp"
#include "ainet/synth.hpp"
#include "support.hpp"

using namespace ainet;

TEST_CASE("signatures are unit norm and mutually orthogonal") {
  SynthConfig cfg;
  cfg.n_classes = 4;
  cfg.dim = 5;
  const auto sigs = class_signatures(cfg);
  REQUIRE(sigs.size() == 3);
  for (std::size_t a = 0; a < sigs.size(); ++a) {
    for (std::size_t b = 0; b < sigs.size(); ++b) {
      double dot = 0;
      for (std::size_t d = 0; d < cfg.dim; ++d) dot += sigs[a][d] * sigs[b][d];
      CHECK(std::abs(dot - (a == b ? 1.0 : 0.0)) < 1e-12);
    }
  }
  cfg.n_classes = 7;
  CHECK_THROWS_AS(class_signatures(cfg), ConfigError);
}

TEST_CASE("label rule holds per bag") {
  SynthConfig cfg;
  cfg.n_instances = 64;
  cfg.dim = 4;
  cfg.n_classes = 3;
  const auto sigs = class_signatures(cfg);
  for (std::size_t i = 0; i < 300; ++i) {
    const int label = default_label(cfg, i);
    const auto sb = generate_bag(cfg, sigs, i, label);
    CHECK(sb.bag.label == label);
    CHECK((label == 0) == (sb.tumor_count() == 0));
    CHECK(sb.bag.size() == 64);
    CHECK(sb.bag.dim() == 4);
  }
}

TEST_CASE("tumor_rate zero still yields one tumor instance in a positive bag") {
  SynthConfig cfg;
  cfg.tumor_rate = 0.0;
  const auto sigs = class_signatures(cfg);
  CHECK(generate_bag(cfg, sigs, 3, 1).tumor_count() == 1);
  CHECK(generate_bag(cfg, sigs, 3, 0).tumor_count() == 0);
}

TEST_CASE("tumor instances sit inside one spatial block") {
  SynthConfig cfg;
  cfg.n_instances = 256;
  cfg.tumor_rate = 0.1;
  const auto sigs = class_signatures(cfg);
  const auto sb = generate_bag(cfg, sigs, 11, 1);
  // Tumors lie on distinct grid cells and carry the signature direction.
  std::set<std::pair<int, int>> cells;
  for (std::size_t i = 0; i < sb.bag.size(); ++i) {
    cells.insert({sb.bag.coords[i].x, sb.bag.coords[i].y});
  }
  CHECK(cells.size() == sb.bag.size());
  CHECK(sb.tumor_count() >= 1);
}

TEST_CASE("generation depends only on seed and index") {
  SynthConfig cfg;
  cfg.n_instances = 32;
  cfg.dim = 6;
  const auto sigs = class_signatures(cfg);
  const auto a = generate_bag(cfg, sigs, 5, 1);
  generate_bag(cfg, sigs, 4, 0);
  const auto b = generate_bag(cfg, sigs, 5, 1);
  CHECK(std::equal(a.bag.features.values().begin(), a.bag.features.values().end(),
                   b.bag.features.values().begin()));
  cfg.seed = 43;
  const auto c = generate_bag(cfg, class_signatures(cfg), 5, 1);
  CHECK_FALSE(std::equal(a.bag.features.values().begin(), a.bag.features.values().end(),
                         c.bag.features.values().begin()));
}

TEST_CASE("dataset files are byte-identical across runs") {
  SynthConfig cfg;
  cfg.n_bags = 6;
  cfg.n_instances = 20;
  cfg.dim = 3;
  cfg.seed = 7;
  const auto d1 = testing::scratch_dir("synth_a");
  const auto d2 = testing::scratch_dir("synth_b");
  const auto m1 = generate_dataset(cfg, d1);
  const auto m2 = generate_dataset(cfg, d2);
  CHECK(testing::read_bytes(m1) == testing::read_bytes(m2));
  for (const auto& r : read_manifest(m1, 2)) {
    CHECK(testing::read_bytes(r.path) == testing::read_bytes(d2 / r.path.filename()));
  }
  cfg.n_bags = 0;
  const auto empty = generate_dataset(cfg, testing::scratch_dir("synth_empty"));
  CHECK(read_manifest(empty, 2).empty());
}

TEST_CASE("config validation") {
  SynthConfig cfg;
  cfg.tumor_rate = 1.5;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
  cfg = {};
  cfg.n_morphologies = 0;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
  cfg = {};
  cfg.n_instances = 0;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
}
