// SPDX-License-Identifier: Apache-2.0
#include "ainet/train.hpp"

#include <cmath>
#include <fstream>
#include <numeric>

#include "ainet/errors.hpp"
#include "ainet/rng.hpp"

namespace ainet {

std::vector<Bag> load_bags(const std::vector<ManifestRecord>& records) {
  std::vector<Bag> bags;
  bags.reserve(records.size());
  for (const auto& r : records) bags.push_back(load_bag(r));
  return bags;
}

namespace {

void check_bags(const std::vector<Bag>& bags, int classes) {
  if (bags.empty()) throw EmptyInputError("no bags to train on");
  const std::size_t d = bags.front().dim();
  for (const auto& b : bags) {
    if (b.dim() != d) {
      throw DimensionError("bag '" + b.id + "' has dim " + std::to_string(b.dim()) + ", expected " +
                           std::to_string(d));
    }
    if (b.label < 0 || b.label >= classes) {
      throw ConfigError("bag '" + b.id + "' label " + std::to_string(b.label) + " is outside [0, " +
                        std::to_string(classes) + ")");
    }
  }
}

}  // namespace

TrainResult train(const std::vector<Bag>& bags, const TrainConfig& cfg) {
  validate(cfg);
  check_bags(bags, cfg.classes);
  TrainResult result{init_model(bags.front().dim(), cfg), {}};
  std::vector<RegionPartition> parts;
  parts.reserve(bags.size());
  for (const auto& b : bags) parts.push_back(partition(b, cfg.regions));

  auto params = result.params.trainable();
  AdamWState state = adamw_init(params);
  std::vector<std::size_t> order(bags.size());
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    CounterRng rng(substream_key(cfg.seed, "shuffle", epoch));
    rng.shuffle(std::span<std::size_t>(order));

    EpochLog log;
    log.epoch = epoch + 1;
    std::size_t correct = 0;
    for (std::size_t i : order) {
      result.params.zero_grad();
      ForwardPass fp = forward(result.params, bags[i], parts[i], cfg);
      const double total = fp.loss_total.item();
      if (!std::isfinite(total)) {
        throw NumericError("non-finite loss on bag '" + bags[i].id + "' in epoch " + std::to_string(epoch + 1));
      }
      log.loss += total;
      log.loss_bag += fp.loss_bag.item();
      log.loss_region += fp.loss_region.item();
      log.loss_mse += fp.loss_mse.item();
      const auto probs = fp.prediction.bag_probs.values();
      std::vector<double> p(probs.begin(), probs.end());
      correct += predicted_class(p) == bags[i].label;
      backward(fp.loss_total);
      adamw_step(params, state, cfg.optim);
    }
    const double n = static_cast<double>(bags.size());
    log.loss /= n;
    log.loss_bag /= n;
    log.loss_region /= n;
    log.loss_mse /= n;
    log.train_accuracy = static_cast<double>(correct) / n;
    result.log.push_back(log);
  }
  return result;
}

void write_log_csv(const std::filesystem::path& path, const std::vector<EpochLog>& log) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError(FormatError::Kind::Io, "cannot open '" + path.string() + "' for writing");
  out << "epoch,loss,loss_bag,loss_region,loss_mse,train_accuracy\n";
  for (const auto& e : log) {
    out << e.epoch << ',' << format_real(e.loss) << ',' << format_real(e.loss_bag) << ','
        << format_real(e.loss_region) << ',' << format_real(e.loss_mse) << ',' << format_real(e.train_accuracy)
        << '\n';
  }
}

std::vector<BagPrediction> predict_bags(const ModelParams& params, const std::vector<Bag>& bags,
                                        const TrainConfig& cfg) {
  std::vector<BagPrediction> out;
  out.reserve(bags.size());
  for (const auto& b : bags) {
    auto probs = predict_bag(params, b, partition(b, cfg.regions), cfg);
    for (double p : probs) {
      if (!std::isfinite(p)) throw NumericError("non-finite probability for bag '" + b.id + "'");
    }
    out.push_back({b.id, b.label, std::move(probs)});
  }
  return out;
}

FoldSplit split_fold(const std::vector<Bag>& bags, std::size_t folds, std::size_t fold, std::uint64_t seed) {
  if (folds < 2) throw ConfigError("folds must be >= 2");
  if (fold >= folds) {
    throw ConfigError("fold " + std::to_string(fold) + " is outside [0, " + std::to_string(folds) + ")");
  }
  std::vector<int> labels;
  labels.reserve(bags.size());
  for (const auto& b : bags) labels.push_back(b.label);
  const auto assign = kfold_assign(labels, folds, seed);
  FoldSplit split;
  for (std::size_t i = 0; i < bags.size(); ++i) (assign[i] == fold ? split.test : split.train).push_back(bags[i]);
  return split;
}

std::vector<FoldReport> cross_validate(const std::vector<Bag>& bags, const TrainConfig& cfg, std::size_t folds) {
  std::vector<FoldReport> reports;
  for (std::size_t f = 0; f < folds; ++f) {
    const FoldSplit split = split_fold(bags, folds, f, cfg.seed);
    if (split.test.empty()) throw EmptyInputError("fold " + std::to_string(f) + " has no test bags");
    const TrainResult trained = train(split.train, cfg);
    reports.push_back(make_fold_report(f, predict_bags(trained.params, split.test, cfg)));
  }
  return reports;
}

}  // namespace ainet
