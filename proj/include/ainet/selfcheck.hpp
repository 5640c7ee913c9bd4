// SPDX-License-Identifier: Apache-2.0
//
// Built-in oracle suite behind `ainet selfcheck`. Each check compares a
// library routine against an independent brute-force reference. The routines
// under test are injectable so a test can swap in a broken one and watch the
// check fail.
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ainet/metrics.hpp"
#include "ainet/model.hpp"
#include "ainet/synth.hpp"

namespace ainet {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

using ForwardFn = std::function<ForwardPass(const ModelParams&, const Bag&, const RegionPartition&,
                                            const TrainConfig&)>;

struct SelfcheckOps {
  ForwardFn forward = ainet::forward;
  std::function<std::vector<std::size_t>(std::span<const Real>, std::size_t)> top_k = top_k_indices;
  std::function<std::optional<double>(std::span<const double>, std::span<const std::uint8_t>)> auc = binary_auc;
  std::function<std::vector<std::size_t>(std::span<const Real>, double)> surviving = surviving_rows;
  std::function<SyntheticBag(const SynthConfig&, const std::vector<std::vector<double>>&, std::size_t, int)>
      generate = generate_bag;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst;  // "<tensor>[<flat index>]"
  std::size_t entries = 0;
  // Entries whose +-h perturbation changed which anchors or rows were kept;
  // the loss is only piecewise smooth across such changes.
  std::size_t selection_changes = 0;
};

/// |analytic - numeric| / max(|analytic|, |numeric|, kGradCheckFloor). The
/// floor sits above the rounding noise of a central difference with h=1e-5
/// (about 1e-9 absolute for losses of order 10), which would otherwise swamp
/// entries whose true gradient is below 1e-5.
inline constexpr double kGradCheckFloor = 1e-4;
double grad_rel_error(double analytic, double numeric);

/// Central differences with step h on every entry of every parameter of a
/// freshly initialised model, against the backward pass of loss_total.
GradCheckReport gradient_check(const TrainConfig& cfg, const Bag& bag, double h, const ForwardFn& fwd);

CheckResult check_gradients(const SelfcheckOps& ops);
CheckResult check_top_k(const SelfcheckOps& ops, std::size_t cases);
CheckResult check_auc(const SelfcheckOps& ops, std::size_t cases);
CheckResult check_mask_count(const SelfcheckOps& ops, std::size_t cases);
CheckResult check_generator(const SelfcheckOps& ops, std::size_t bags);

std::vector<CheckResult> run_selfcheck(const SelfcheckOps& ops = {});

}  // namespace ainet
