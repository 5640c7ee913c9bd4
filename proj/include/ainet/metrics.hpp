// SPDX-License-Identifier: Apache-2.0
//
// Classification metrics and stratified k-fold assignment.
//
// Binary tasks (two classes) predict class 1 iff p(1) >= threshold; with more
// classes the argmax wins and ties go to the lower class. F1 and AUC are
// macro-averaged one-vs-rest for more than two classes. AUC is undefined for
// a class without positives or without negatives; such classes are skipped
// and, if nothing is left, the AUC is missing.
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ainet {

using ProbRows = std::vector<std::vector<double>>;

inline constexpr double kDecisionThreshold = 0.5;

int predicted_class(std::span<const double> probs, double threshold = kDecisionThreshold);

double accuracy(const ProbRows& probs, std::span<const int> labels, double threshold = kDecisionThreshold);

/// Mann-Whitney AUC of `scores` for the positive flags: (concordant + ties/2)
/// / (P * Neg). Missing when either side is empty.
std::optional<double> binary_auc(std::span<const double> scores, std::span<const std::uint8_t> positive);

std::optional<double> auc(const ProbRows& probs, std::span<const int> labels);

/// F1 of class 1 for binary tasks, macro-F1 otherwise; 0/0 counts as 0.
double f1(std::span<const int> predicted, std::span<const int> labels, int n_classes);
double f1(const ProbRows& probs, std::span<const int> labels, double threshold = kDecisionThreshold);

/// Stratified fold index for every item: within each class, a seeded shuffle
/// is dealt round-robin, continuing where the previous class stopped.
std::vector<std::size_t> kfold_assign(std::span<const int> labels, std::size_t folds, std::uint64_t seed);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
};

MeanStd mean_std(std::span<const double> values);

struct BagPrediction {
  std::string bag_id;
  int label = 0;
  std::vector<double> probs;
};

struct FoldReport {
  std::size_t fold = 0;
  double accuracy = 0.0;
  std::optional<double> auc;
  double f1 = 0.0;
  std::vector<BagPrediction> predictions;
};

FoldReport make_fold_report(std::size_t fold, std::vector<BagPrediction> predictions);

struct CvSummary {
  MeanStd accuracy;
  std::optional<MeanStd> auc;  // over folds with a defined AUC
  MeanStd f1;
};

CvSummary summarize(const std::vector<FoldReport>& reports);

/// Shortest round-trip decimal text for v.
std::string format_real(double v);

/// `fold,accuracy,auc,f1` rows followed by `mean` and `std` rows.
void write_metrics_csv(const std::filesystem::path& path, const std::vector<FoldReport>& reports);
/// `bag_id,label,prob_0,...,prob_{C-1}`.
void write_predictions_csv(const std::filesystem::path& path, const std::vector<BagPrediction>& predictions);

}  // namespace ainet
