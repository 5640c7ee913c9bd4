// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "ainet/tensor.hpp"

namespace ainet {

/// Probabilities are clamped to [kProbClamp, 1 - kProbClamp] before the log.
inline constexpr Real kProbClamp = static_cast<Real>(1e-12);

/// (1/N) * sum_i ||f_ins_i - f_latent_i||^2 over the N rows.
Tensor loss_mse(const Tensor& original, const Tensor& latent);

/// Mean over rows of -log p[row, label]; every region inherits the bag label.
Tensor loss_region(const Tensor& region_probs, int label);

/// -log p[label] for a 1 x C (or C) probability vector.
Tensor loss_bag(const Tensor& bag_probs, int label);

/// bag + region + mse, summed in that order.
Tensor loss_total(const Tensor& mse, const Tensor& region, const Tensor& bag);

}  // namespace ainet
