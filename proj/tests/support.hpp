// SPDX-License-Identifier: Apache-2.0
// Shared helpers for the unit tests.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <string>
#include <vector>

#include "ainet/bag.hpp"
#include "ainet/rng.hpp"
#include "ainet/tensor.hpp"

namespace testing {

using ainet::Real;
using ainet::Tensor;

inline Tensor random_matrix(ainet::CounterRng& rng, std::size_t rows, std::size_t cols, bool grad = false,
                            double scale = 1.0) {
  std::vector<Real> v(rows * cols);
  for (auto& x : v) x = static_cast<Real>(scale * rng.normal());
  return Tensor::matrix(rows, cols, std::move(v), grad);
}

inline Tensor random_vector(ainet::CounterRng& rng, std::size_t n, bool grad = false) {
  std::vector<Real> v(n);
  for (auto& x : v) x = static_cast<Real>(rng.normal());
  return Tensor::vector(std::move(v), grad);
}

/// Largest |analytic - numeric| / max(|analytic|, |numeric|, 1e-6) over every
/// entry of every input, where `f` maps the inputs to a scalar.
inline double max_fd_error(std::vector<Tensor> inputs, const std::function<Tensor(std::vector<Tensor>&)>& f,
                           double h = 1e-6) {
  for (auto& t : inputs) t.zero_grad();
  ainet::backward(f(inputs));
  double worst = 0.0;
  for (auto& t : inputs) {
    const std::vector<Real> analytic(t.grad().begin(), t.grad().end());
    for (std::size_t i = 0; i < t.numel(); ++i) {
      const Real saved = t.values()[i];
      t.values_mut()[i] = saved + h;
      double plus, minus;
      {
        ainet::NoGradGuard g;
        plus = f(inputs).item();
        t.values_mut()[i] = saved - h;
        minus = f(inputs).item();
      }
      t.values_mut()[i] = saved;
      const double numeric = (plus - minus) / (2 * h);
      const double denom = std::max({std::abs(numeric), std::abs(static_cast<double>(analytic[i])), 1e-6});
      worst = std::max(worst, std::abs(numeric - analytic[i]) / denom);
    }
  }
  return worst;
}

inline std::vector<std::uint8_t> read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("ainet_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// N instances on a row-major grid of width `width`, random features.
inline ainet::Bag grid_bag(ainet::CounterRng& rng, std::size_t n, std::size_t d, std::size_t width, int label = 0) {
  ainet::Bag b;
  b.id = "grid";
  b.features = random_matrix(rng, n, d);
  for (std::size_t i = 0; i < n; ++i) {
    b.coords.push_back({static_cast<std::int32_t>(i % width), static_cast<std::int32_t>(i / width)});
  }
  b.label = label;
  return b;
}

}  // namespace testing
