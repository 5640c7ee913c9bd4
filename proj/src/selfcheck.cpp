// SPDX-License-Identifier: Apache-2.0
#include "ainet/selfcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "ainet/arc.hpp"
#include "ainet/dam.hpp"
#include "ainet/rng.hpp"

namespace ainet {

double grad_rel_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), kGradCheckFloor});
  return std::abs(analytic - numeric) / denom;
}

namespace {

struct Selection {
  std::vector<std::size_t> anchors;
  std::vector<std::vector<std::size_t>> rows;
  bool operator==(const Selection&) const = default;
};

Selection selection_of(const ForwardPass& fp) {
  Selection s{fp.anchors.indices, {}};
  for (const auto& c : fp.corrected) s.rows.push_back(c.rows);
  return s;
}

}  // namespace

GradCheckReport gradient_check(const TrainConfig& cfg, const Bag& bag, double h, const ForwardFn& fwd) {
  ModelParams params = init_model(bag.dim(), cfg);
  const RegionPartition part = partition(bag, cfg.regions);
  params.zero_grad();
  ForwardPass base = fwd(params, bag, part, cfg);
  backward(base.loss_total);
  const Selection base_sel = selection_of(base);

  GradCheckReport report;
  auto eval = [&](Selection& sel) {
    NoGradGuard no_grad;
    const ForwardPass fp = fwd(params, bag, part, cfg);
    sel = selection_of(fp);
    return static_cast<double>(fp.loss_total.item());
  };
  for (auto& named : params.named()) {
    Tensor& t = *named.tensor;
    const std::vector<Real> analytic(t.grad().begin(), t.grad().end());
    for (std::size_t i = 0; i < t.numel(); ++i) {
      const Real saved = t.values()[i];
      Selection plus_sel, minus_sel;
      t.values_mut()[i] = saved + static_cast<Real>(h);
      const double plus = eval(plus_sel);
      t.values_mut()[i] = saved - static_cast<Real>(h);
      const double minus = eval(minus_sel);
      t.values_mut()[i] = saved;
      if (!(plus_sel == base_sel) || !(minus_sel == base_sel)) ++report.selection_changes;
      const double numeric = (plus - minus) / (2.0 * h);
      const double err = grad_rel_error(analytic[i], numeric);
      ++report.entries;
      if (!(err <= report.max_rel_error)) {
        report.max_rel_error = err;
        report.worst = named.name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return report;
}

namespace {

std::string fmt(double v) {
  std::ostringstream out;
  out << v;
  return out.str();
}

}  // namespace

CheckResult check_gradients(const SelfcheckOps& ops) {
  SynthConfig sc;
  sc.n_instances = 16;
  sc.dim = 8;
  sc.seed = 7;
  const auto sigs = class_signatures(sc);
  const Bag bag = generate_bag(sc, sigs, 0, 1).bag;

  CheckResult r{"gradients", true, {}};
  double worst = 0.0;
  for (Variant v : {Variant::Baseline, Variant::Dam, Variant::DamMha, Variant::DamAcf, Variant::Full}) {
    TrainConfig cfg;
    cfg.regions = 4;
    cfg.k_percent = 25;
    cfg.mask_ratio = 0.5;
    cfg.hidden = 16;
    cfg.heads = 2;
    cfg.variant = v;
    const auto rep = gradient_check(cfg, bag, 1e-5, ops.forward);
    const bool ok = rep.max_rel_error < 1e-4 && rep.selection_changes == 0;
    r.passed = r.passed && ok;
    worst = std::max(worst, rep.max_rel_error);
    if (!ok) {
      r.detail += std::string(variant_name(v)) + ": max rel error " + fmt(rep.max_rel_error) + " at " +
                  rep.worst + ", " + std::to_string(rep.selection_changes) + " selection changes; ";
    }
  }
  if (r.passed) r.detail = "5 variants, max rel error " + fmt(worst);
  return r;
}

namespace {

// Weights drawn from a small grid so that ties are common.
std::vector<Real> tie_heavy(CounterRng& rng, std::size_t n, std::uint64_t levels) {
  std::vector<Real> w(n);
  for (auto& x : w) x = static_cast<Real>(rng.below(levels)) / static_cast<Real>(4);
  return w;
}

}  // namespace

CheckResult check_top_k(const SelfcheckOps& ops, std::size_t cases) {
  CounterRng rng(substream_key(0x70cc, "selfcheck-topk"));
  for (std::size_t c = 0; c < cases; ++c) {
    const std::size_t n = 1 + rng.below(64);
    const auto w = c % 2 == 0 ? tie_heavy(rng, n, 1 + rng.below(6)) : tie_heavy(rng, n, 1u << 20);
    const double k_percent = static_cast<double>(rng.below(101));
    const std::size_t count = anchor_count(k_percent, n);
    std::vector<std::size_t> oracle(n);
    std::iota(oracle.begin(), oracle.end(), std::size_t{0});
    std::stable_sort(oracle.begin(), oracle.end(), [&](std::size_t a, std::size_t b) { return w[a] > w[b]; });
    oracle.resize(count);
    if (ops.top_k(w, count) != oracle) {
      return {"top-k", false, "case " + std::to_string(c) + " (n=" + std::to_string(n) + ", k=" +
                                  fmt(k_percent) + "%) disagrees with the sort oracle"};
    }
  }
  return {"top-k", true, std::to_string(cases) + " cases"};
}

CheckResult check_auc(const SelfcheckOps& ops, std::size_t cases) {
  CounterRng rng(substream_key(0xa0c, "selfcheck-auc"));
  for (std::size_t c = 0; c < cases; ++c) {
    const std::size_t n = 2 + rng.below(199);
    std::vector<double> scores(n);
    std::vector<std::uint8_t> pos(n);
    const std::uint64_t levels = c % 3 == 0 ? 3 : 1u << 30;
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = static_cast<double>(rng.below(levels));
      pos[i] = rng.uniform() < 0.4;
    }
    pos[0] = 1;
    pos[1] = 0;
    double concordant = 0.0;
    double np = 0.0, nn = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (pos[i]) np += 1;
      else nn += 1;
      if (!pos[i]) continue;
      for (std::size_t j = 0; j < n; ++j) {
        if (pos[j]) continue;
        concordant += scores[i] > scores[j] ? 1.0 : scores[i] == scores[j] ? 0.5 : 0.0;
      }
    }
    const double oracle = concordant / (np * nn);
    const auto got = ops.auc(scores, pos);
    if (!got || std::abs(*got - oracle) > 1e-12) {
      return {"auc", false, "case " + std::to_string(c) + ": got " + (got ? fmt(*got) : "missing") +
                                ", pairwise oracle " + fmt(oracle)};
    }
  }
  return {"auc", true, std::to_string(cases) + " cases"};
}

CheckResult check_mask_count(const SelfcheckOps& ops, std::size_t cases) {
  CounterRng rng(substream_key(0x3a5c, "selfcheck-mask"));
  for (std::size_t c = 0; c < cases; ++c) {
    const std::size_t t = rng.below(20);
    const std::size_t z = 1 + rng.below(60);
    const std::size_t s = t + z;
    const double r = static_cast<double>(rng.below(100)) / 100.0;
    const auto scores = tie_heavy(rng, s, c % 2 == 0 ? 4 : 1u << 20);
    const std::size_t m = std::min(static_cast<std::size_t>(std::floor(r * static_cast<double>(s))), s - 1);

    std::vector<std::size_t> order(s);
    std::iota(order.begin(), order.end(), std::size_t{0});
    // Drop order: ascending score, higher index first among ties.
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return scores[a] < scores[b] || (scores[a] == scores[b] && a > b);
    });
    std::vector<std::size_t> oracle(order.begin() + static_cast<std::ptrdiff_t>(m), order.end());
    std::sort(oracle.begin(), oracle.end());

    const auto kept = ops.surviving(scores, r);
    if (kept.size() != std::max<std::size_t>(s - m, 1) || kept != oracle) {
      return {"mask-count", false, "case " + std::to_string(c) + " (T=" + std::to_string(t) + ", Z=" +
                                       std::to_string(z) + ", r=" + fmt(r) + "): kept " +
                                       std::to_string(kept.size()) + ", expected " + std::to_string(s - m)};
    }
  }
  return {"mask-count", true, std::to_string(cases) + " cases"};
}

CheckResult check_generator(const SelfcheckOps& ops, std::size_t bags) {
  SynthConfig sc;
  sc.dim = 8;
  const auto sigs = class_signatures(sc);
  std::size_t violations = 0;
  std::size_t tumor = 0, positive_instances = 0;
  for (std::size_t i = 0; i < bags; ++i) {
    const int label = default_label(sc, i);
    const SyntheticBag sb = ops.generate(sc, sigs, i, label);
    const std::size_t count = sb.tumor_count();
    if ((label == 0) != (count == 0)) ++violations;
    if (label != 0) {
      tumor += count;
      positive_instances += sb.bag.size();
    }
  }
  const double fraction = positive_instances == 0 ? 0.0 : static_cast<double>(tumor) /
                                                               static_cast<double>(positive_instances);
  const bool ok = violations == 0 && std::abs(fraction - sc.tumor_rate) <= 0.02;
  return {"generator", ok, std::to_string(bags) + " bags, " + std::to_string(violations) +
                               " label/tumor violations, tumor fraction in positive bags " + fmt(fraction)};
}

std::vector<CheckResult> run_selfcheck(const SelfcheckOps& ops) {
  return {check_gradients(ops), check_top_k(ops, 1000), check_auc(ops, 100), check_mask_count(ops, 500),
          check_generator(ops, 10000)};
}

}  // namespace ainet
