// SPDX-License-Identifier: Apache-2.0
#include "ainet/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "ainet/errors.hpp"
#include "ainet/morton.hpp"
#include "ainet/rng.hpp"

namespace ainet {

namespace fs = std::filesystem;

void validate(const SynthConfig& cfg) {
  if (cfg.n_instances < 1) throw ConfigError("synthetic config: instances must be >= 1");
  if (cfg.dim < 1) throw ConfigError("synthetic config: dim must be >= 1");
  if (cfg.n_classes < 2) throw ConfigError("synthetic config: classes must be >= 2");
  if (cfg.n_morphologies < 1) throw ConfigError("synthetic config: morphologies must be >= 1");
  if (!(cfg.tumor_rate >= 0.0 && cfg.tumor_rate <= 1.0)) {
    throw ConfigError("synthetic config: tumor_rate must lie in [0, 1]");
  }
  if (!(cfg.noise_sigma >= 0.0) || !std::isfinite(cfg.noise_sigma)) {
    throw ConfigError("synthetic config: noise must be a finite value >= 0");
  }
  if (static_cast<std::size_t>(cfg.n_classes) > 1 + cfg.dim) {
    throw ConfigError("synthetic config: " + std::to_string(cfg.n_classes) +
                      " classes need more orthogonal signatures than dim " + std::to_string(cfg.dim) +
                      " allows");
  }
}

std::vector<std::vector<double>> class_signatures(const SynthConfig& cfg) {
  validate(cfg);
  CounterRng rng(substream_key(cfg.seed, "signature"));
  std::vector<std::vector<double>> basis;
  while (basis.size() + 1 < static_cast<std::size_t>(cfg.n_classes)) {
    std::vector<double> v(cfg.dim);
    for (auto& x : v) x = rng.normal();
    for (const auto& b : basis) {
      const double proj = std::inner_product(v.begin(), v.end(), b.begin(), 0.0);
      for (std::size_t i = 0; i < v.size(); ++i) v[i] -= proj * b[i];
    }
    const double norm = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
    if (norm < 1e-6) continue;  // nearly dependent draw, try again
    for (auto& x : v) x /= norm;
    basis.push_back(std::move(v));
  }
  return basis;
}

std::size_t SyntheticBag::tumor_count() const {
  return static_cast<std::size_t>(std::count(tumor.begin(), tumor.end(), std::uint8_t{1}));
}

int default_label(const SynthConfig& cfg, std::size_t index) {
  return static_cast<int>(index % static_cast<std::size_t>(cfg.n_classes));
}

namespace {

// First n cells of a ceil(sqrt(n))-wide square grid, in Z-order.
std::vector<Coord> zorder_cells(std::size_t n) {
  std::size_t side = 1;
  while (side * side < n) ++side;
  std::vector<Coord> cells;
  cells.reserve(side * side);
  for (std::size_t y = 0; y < side; ++y) {
    for (std::size_t x = 0; x < side; ++x) {
      cells.push_back({static_cast<std::int32_t>(x), static_cast<std::int32_t>(y)});
    }
  }
  std::sort(cells.begin(), cells.end(), [](const Coord& a, const Coord& b) {
    return morton_key(static_cast<std::uint32_t>(a.x), static_cast<std::uint32_t>(a.y)) <
           morton_key(static_cast<std::uint32_t>(b.x), static_cast<std::uint32_t>(b.y));
  });
  cells.resize(n);
  return cells;
}

}  // namespace

SyntheticBag generate_bag(const SynthConfig& cfg, const std::vector<std::vector<double>>& signatures,
                          std::size_t index, int label) {
  validate(cfg);
  if (label < 0 || label >= cfg.n_classes) {
    throw ConfigError("synthetic bag label " + std::to_string(label) + " outside [0, " +
                      std::to_string(cfg.n_classes) + ")");
  }
  const std::size_t n = cfg.n_instances;
  const std::size_t d = cfg.dim;
  const std::size_t g = cfg.n_morphologies;
  CounterRng rng(substream_key(cfg.seed, "generator", index));

  std::vector<double> centers(g * d);
  for (auto& c : centers) c = 3.0 * rng.normal();

  // Uniform morphology membership; members of a morphology occupy one
  // contiguous run of the Z-order, i.e. a compact spatial block.
  std::vector<std::size_t> block_size(g, 0);
  for (std::size_t i = 0; i < n; ++i) ++block_size[rng.below(g)];
  std::vector<std::size_t> block_start(g, 0);
  for (std::size_t m = 1; m < g; ++m) block_start[m] = block_start[m - 1] + block_size[m - 1];
  std::vector<std::size_t> morphology(n);
  for (std::size_t m = 0; m < g; ++m) {
    std::fill_n(morphology.begin() + static_cast<std::ptrdiff_t>(block_start[m]), block_size[m], m);
  }

  std::vector<std::uint8_t> tumor(n, 0);
  if (label >= 1) {
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i) count += rng.uniform() < cfg.tumor_rate ? 1 : 0;
    count = std::max<std::size_t>(count, 1);  // a positive bag holds a positive instance
    std::vector<std::size_t> candidates;
    for (std::size_t m = 0; m < g; ++m) {
      if (block_size[m] > 0) candidates.push_back(m);
    }
    const std::size_t block = candidates[rng.below(candidates.size())];
    count = std::min(count, block_size[block]);
    std::vector<std::size_t> members(block_size[block]);
    std::iota(members.begin(), members.end(), block_start[block]);
    for (std::size_t k = 0; k < count; ++k) {
      const std::size_t j = k + static_cast<std::size_t>(rng.below(members.size() - k));
      std::swap(members[k], members[j]);
      tumor[members[k]] = 1;
    }
  }

  const auto cells = zorder_cells(n);
  std::vector<double> features(n * d);
  for (std::size_t p = 0; p < n; ++p) {
    const double* center = centers.data() + morphology[p] * d;
    for (std::size_t j = 0; j < d; ++j) {
      double v = center[j] + cfg.noise_sigma * rng.normal();
      if (tumor[p]) v += signatures.at(static_cast<std::size_t>(label - 1)).at(j);
      features[p * d + j] = v;
    }
  }

  // Stored instance order is shuffled so the partitioner has to recover space.
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  rng.shuffle(std::span<std::size_t>(perm));

  SyntheticBag out;
  char name[32];
  std::snprintf(name, sizeof(name), "bag_%05zu", index);
  out.bag.id = name;
  out.bag.label = label;
  out.bag.coords.resize(n);
  out.tumor.resize(n);
  std::vector<Real> values(n * d);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t p = perm[i];
    out.bag.coords[i] = cells[p];
    out.tumor[i] = tumor[p];
    for (std::size_t j = 0; j < d; ++j) {
      // Rounded through float32 so in-memory bags equal their file image.
      values[i * d + j] = static_cast<Real>(static_cast<float>(features[p * d + j]));
    }
  }
  out.bag.features = Tensor::matrix(n, d, std::move(values));
  return out;
}

fs::path generate_dataset(const SynthConfig& cfg, const fs::path& out_dir) {
  validate(cfg);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw FormatError(FormatError::Kind::Io, "cannot create '" + out_dir.string() + "': " + ec.message());
  const auto signatures = class_signatures(cfg);
  std::vector<ManifestRecord> records;
  records.reserve(cfg.n_bags);
  for (std::size_t i = 0; i < cfg.n_bags; ++i) {
    auto sb = generate_bag(cfg, signatures, i, default_label(cfg, i));
    const fs::path file = out_dir / (sb.bag.id + ".aifb");
    write_bag_file(sb.bag, file);
    records.push_back({sb.bag.id, file, sb.bag.label});
  }
  const fs::path manifest = out_dir / "manifest.csv";
  write_manifest(manifest, records);
  return manifest;
}

}  // namespace ainet
