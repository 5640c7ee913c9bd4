// SPDX-License-Identifier: Apache-2.0
#include "ainet/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>

#include "ainet/errors.hpp"
#include "ainet/rng.hpp"

namespace ainet {

namespace {

void check_sizes(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw DimensionError(std::string(what) + ": " + std::to_string(a) + " predictions vs " + std::to_string(b) +
                         " labels");
  }
}

}  // namespace

int predicted_class(std::span<const double> probs, double threshold) {
  if (probs.empty()) throw EmptyInputError("predicted_class: empty probability vector");
  if (probs.size() == 2) return probs[1] >= threshold ? 1 : 0;
  // max_element returns the first maximum, i.e. the lower class on ties.
  return static_cast<int>(std::max_element(probs.begin(), probs.end()) - probs.begin());
}

double accuracy(const ProbRows& probs, std::span<const int> labels, double threshold) {
  check_sizes(probs.size(), labels.size(), "accuracy");
  if (labels.empty()) throw EmptyInputError("accuracy: no predictions");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) correct += predicted_class(probs[i], threshold) == labels[i];
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

std::optional<double> binary_auc(std::span<const double> scores, std::span<const std::uint8_t> positive) {
  check_sizes(scores.size(), positive.size(), "auc");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Twice the positive rank sum, with tied groups sharing their mid-rank;
  // doubling keeps every quantity an exact integer.
  double twice_rank_sum = 0.0;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double twice_mid = static_cast<double>(i + 1 + j);  // 2 * mean of ranks i+1..j
    for (std::size_t k = i; k < j; ++k) {
      if (positive[order[k]]) {
        twice_rank_sum += twice_mid;
        ++pos;
      }
    }
    i = j;
  }
  const std::size_t neg = n - pos;
  if (pos == 0 || neg == 0) return std::nullopt;
  const double p = static_cast<double>(pos);
  // concordant + ties/2 == R_pos - P(P+1)/2
  const double numerator = (twice_rank_sum - p * (p + 1.0)) / 2.0;
  return numerator / (p * static_cast<double>(neg));
}

std::optional<double> auc(const ProbRows& probs, std::span<const int> labels) {
  check_sizes(probs.size(), labels.size(), "auc");
  if (labels.empty()) return std::nullopt;
  const std::size_t classes = probs[0].size();
  std::vector<double> scores(labels.size());
  std::vector<std::uint8_t> positive(labels.size());
  auto one_vs_rest = [&](std::size_t c) {
    for (std::size_t i = 0; i < labels.size(); ++i) {
      scores[i] = probs[i][c];
      positive[i] = labels[i] == static_cast<int>(c);
    }
    return binary_auc(scores, positive);
  };
  if (classes == 2) return one_vs_rest(1);
  double total = 0.0;
  std::size_t defined = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    if (auto a = one_vs_rest(c)) {
      total += *a;
      ++defined;
    }
  }
  if (defined == 0) return std::nullopt;
  return total / static_cast<double>(defined);
}

double f1(std::span<const int> predicted, std::span<const int> labels, int n_classes) {
  check_sizes(predicted.size(), labels.size(), "f1");
  auto class_f1 = [&](int c) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const bool p = predicted[i] == c;
      const bool t = labels[i] == c;
      tp += p && t;
      fp += p && !t;
      fn += !p && t;
    }
    const std::size_t denom = 2 * tp + fp + fn;
    return denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
  };
  if (n_classes == 2) return class_f1(1);
  double total = 0.0;
  for (int c = 0; c < n_classes; ++c) total += class_f1(c);
  return total / static_cast<double>(n_classes);
}

double f1(const ProbRows& probs, std::span<const int> labels, double threshold) {
  check_sizes(probs.size(), labels.size(), "f1");
  if (probs.empty()) return 0.0;
  std::vector<int> predicted;
  predicted.reserve(probs.size());
  for (const auto& p : probs) predicted.push_back(predicted_class(p, threshold));
  return f1(predicted, labels, static_cast<int>(probs[0].size()));
}

std::vector<std::size_t> kfold_assign(std::span<const int> labels, std::size_t folds, std::uint64_t seed) {
  if (folds < 1) throw ConfigError("kfold: folds must be >= 1");
  int max_label = -1;
  for (int l : labels) max_label = std::max(max_label, l);
  std::vector<std::size_t> fold_of(labels.size(), 0);
  std::size_t next = 0;
  for (int c = 0; c <= max_label; ++c) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == c) members.push_back(i);
    }
    CounterRng rng(substream_key(seed, "folds", static_cast<std::uint64_t>(c)));
    rng.shuffle(std::span<std::size_t>(members));
    for (std::size_t idx : members) {
      fold_of[idx] = next;
      next = (next + 1) % folds;
    }
  }
  return fold_of;
}

MeanStd mean_std(std::span<const double> values) {
  if (values.empty()) return {};
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(values.size());
  return {mean, std::sqrt(var)};
}

FoldReport make_fold_report(std::size_t fold, std::vector<BagPrediction> predictions) {
  if (predictions.empty()) throw EmptyInputError("fold " + std::to_string(fold) + " has no test bags");
  ProbRows probs;
  std::vector<int> labels;
  for (const auto& p : predictions) {
    probs.push_back(p.probs);
    labels.push_back(p.label);
  }
  FoldReport r;
  r.fold = fold;
  r.accuracy = accuracy(probs, labels);
  r.auc = auc(probs, labels);
  r.f1 = f1(probs, labels);
  r.predictions = std::move(predictions);
  return r;
}

CvSummary summarize(const std::vector<FoldReport>& reports) {
  std::vector<double> acc, au, f;
  for (const auto& r : reports) {
    acc.push_back(r.accuracy);
    f.push_back(r.f1);
    if (r.auc) au.push_back(*r.auc);
  }
  CvSummary s;
  s.accuracy = mean_std(acc);
  s.f1 = mean_std(f);
  if (!au.empty()) s.auc = mean_std(au);
  return s;
}

std::string format_real(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError(FormatError::Kind::Io, "cannot open '" + path.string() + "' for writing");
  return out;
}

std::string optional_real(const std::optional<double>& v) { return v ? format_real(*v) : std::string(); }

}  // namespace

void write_metrics_csv(const std::filesystem::path& path, const std::vector<FoldReport>& reports) {
  auto out = open_csv(path);
  out << "fold,accuracy,auc,f1\n";
  for (const auto& r : reports) {
    out << r.fold << ',' << format_real(r.accuracy) << ',' << optional_real(r.auc) << ',' << format_real(r.f1)
        << '\n';
  }
  const auto s = summarize(reports);
  out << "mean," << format_real(s.accuracy.mean) << ','
      << (s.auc ? format_real(s.auc->mean) : std::string()) << ',' << format_real(s.f1.mean) << '\n';
  out << "std," << format_real(s.accuracy.std) << ',' << (s.auc ? format_real(s.auc->std) : std::string())
      << ',' << format_real(s.f1.std) << '\n';
}

void write_predictions_csv(const std::filesystem::path& path, const std::vector<BagPrediction>& predictions) {
  auto out = open_csv(path);
  const std::size_t classes = predictions.empty() ? 0 : predictions.front().probs.size();
  out << "bag_id,label";
  for (std::size_t c = 0; c < classes; ++c) out << ",prob_" << c;
  out << '\n';
  for (const auto& p : predictions) {
    out << p.bag_id << ',' << p.label;
    for (double v : p.probs) out << ',' << format_real(v);
    out << '\n';
  }
}

}  // namespace ainet
