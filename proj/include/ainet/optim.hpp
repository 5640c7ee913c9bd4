// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "ainet/tensor.hpp"

namespace ainet {

struct AdamWConfig {
  double lr = 1e-4;
  double weight_decay = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One optimizer slot per parameter tensor.
struct AdamWState {
  std::vector<std::vector<Real>> m;
  std::vector<std::vector<Real>> v;
  std::uint64_t step = 0;
  bool initialized = false;
};

/// A trainable tensor. Decay is applied to weights only, never to biases.
struct ParamRef {
  Tensor* tensor;
  bool decay;
};

AdamWState adamw_init(const std::vector<ParamRef>& params);

/// Decoupled AdamW: theta -= lr * (m_hat / (sqrt(v_hat) + eps) + wd * theta)
/// using each tensor's accumulated grad. Throws ContractError if `state` was
/// not initialized for these parameters.
void adamw_step(const std::vector<ParamRef>& params, AdamWState& state, const AdamWConfig& cfg);

}  // namespace ainet
