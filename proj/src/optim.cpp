// SPDX-License-Identifier: Apache-2.0
#include "ainet/optim.hpp"

#include <cmath>

#include "ainet/errors.hpp"

namespace ainet {

AdamWState adamw_init(const std::vector<ParamRef>& params) {
  AdamWState s;
  for (const auto& p : params) {
    s.m.emplace_back(p.tensor->numel(), Real(0));
    s.v.emplace_back(p.tensor->numel(), Real(0));
  }
  s.initialized = true;
  return s;
}

void adamw_step(const std::vector<ParamRef>& params, AdamWState& state, const AdamWConfig& cfg) {
  if (!state.initialized || state.m.size() != params.size()) {
    throw ContractError("adamw_step: optimizer state is not initialized for these parameters");
  }
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double bias1 = 1.0 - std::pow(cfg.beta1, t);
  const double bias2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& p = *params[k].tensor;
    auto theta = p.values_mut();
    auto grad = p.grad();
    auto& m = state.m[k];
    auto& v = state.v[k];
    if (grad.size() != theta.size() || m.size() != theta.size()) {
      throw ContractError("adamw_step: parameter " + std::to_string(k) + " has no matching gradient/state");
    }
    const double wd = params[k].decay ? cfg.weight_decay : 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double g = grad[i];
      const double mi = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
      const double vi = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
      m[i] = static_cast<Real>(mi);
      v[i] = static_cast<Real>(vi);
      const double m_hat = mi / bias1;
      const double v_hat = vi / bias2;
      const double th = theta[i];
      theta[i] = static_cast<Real>(th - cfg.lr * (m_hat / (std::sqrt(v_hat) + cfg.eps) + wd * th));
    }
  }
}

}  // namespace ainet
