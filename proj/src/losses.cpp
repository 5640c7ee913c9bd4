// SPDX-License-Identifier: Apache-2.0
#include "ainet/losses.hpp"

#include "ainet/errors.hpp"

namespace ainet {

Tensor loss_mse(const Tensor& original, const Tensor& latent) {
  if (original.shape() != latent.shape()) {
    throw DimensionError("loss_mse: shapes " + shape_string(original.shape()) + " and " +
                         shape_string(latent.shape()) + " differ");
  }
  if (original.rows() == 0) throw EmptyInputError("loss_mse: no instances");
  return scale(squared_difference_sum(original, latent), Real(1) / static_cast<Real>(original.rows()));
}

Tensor loss_region(const Tensor& region_probs, int label) {
  const std::size_t rows = region_probs.rows();
  const std::size_t classes = region_probs.cols();
  if (label < 0 || static_cast<std::size_t>(label) >= classes) {
    throw IndexError("loss: label " + std::to_string(label) + " outside [0, " + std::to_string(classes) + ")");
  }
  std::vector<Real> onehot(region_probs.numel(), Real(0));
  for (std::size_t r = 0; r < rows; ++r) onehot[r * classes + static_cast<std::size_t>(label)] = Real(1);
  const Tensor mask(region_probs.shape(), std::move(onehot));
  const Tensor logp = log(clamp(region_probs, kProbClamp, Real(1) - kProbClamp));
  return scale(sum(mul(mask, logp)), Real(-1) / static_cast<Real>(rows));
}

Tensor loss_bag(const Tensor& bag_probs, int label) {
  if (bag_probs.rows() != 1) {
    throw DimensionError("loss_bag: expected one probability row, got " + shape_string(bag_probs.shape()));
  }
  return loss_region(bag_probs, label);
}

Tensor loss_total(const Tensor& mse, const Tensor& region, const Tensor& bag) {
  return add(add(bag, region), mse);
}

}  // namespace ainet
