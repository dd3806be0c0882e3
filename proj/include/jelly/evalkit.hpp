#pragma once

// Metrics and multi-run aggregation: confusion matrices, accuracies, jellyfish
// TP/FP, the Eq.-2 style sum-of-stds metric, and mean+-std reporting over
// seeds. Sample (n-1) standard deviations throughout.

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "jelly/core.hpp"

namespace jelly {

struct ConfusionMatrix {
  // rows = true class, columns = predicted class
  Eigen::Matrix<std::int64_t, kNumClasses, kNumClasses> m =
      Eigen::Matrix<std::int64_t, kNumClasses, kNumClasses>::Zero();
  // gated jellyfish reports per true class (set when a gate is in play)
  std::optional<std::array<std::int64_t, kNumClasses>> reported_counts;

  void add(ClassLabel truth, ClassLabel predicted) {
    m(class_index(truth), class_index(predicted)) += 1;
  }
  std::int64_t total() const { return m.sum(); }
  std::int64_t row_total(int c) const { return m.row(c).sum(); }
};

double accuracy(const ConfusionMatrix& cm);  // trace / total

// diagonal / row sum; absent classes yield nullopt, never 0
std::array<std::optional<double>, kNumClasses> per_class_accuracy(const ConfusionMatrix& cm);

// Predicted-as-jellyfish among non-jellyfish rows (ungated).
std::int64_t jellyfish_fp_count(const ConfusionMatrix& cm);

// Sum over classes of the across-run sample std of the per-class diagonal
// (true-positive) entries.
double std_sum_metric(const std::vector<ConfusionMatrix>& runs);

// Divides each configuration's value by the baseline configuration's value.
std::vector<double> normalize(const std::vector<double>& values, double baseline);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

MeanStd mean_std(const std::vector<double>& values);  // n >= 2 required

// One evaluation run's scalar metrics plus its confusion matrix.
struct RunMetrics {
  double frame_acc = 0.0;
  double event_acc = 0.0;
  std::optional<double> jelly_acc;  // TP rate; unset when no true jellyfish
  std::int64_t jelly_fp_count = 0;
  double jelly_fp_rate = 0.0;
  ConfusionMatrix confusion;
};

struct RunReport {
  int n_runs = 0;
  std::vector<ConfusionMatrix> matrices;
  Eigen::Matrix<double, kNumClasses, kNumClasses> mean_matrix =
      Eigen::Matrix<double, kNumClasses, kNumClasses>::Zero();
  MeanStd frame_acc, event_acc, jelly_acc, jelly_fp_count, jelly_fp_rate;
};

RunReport aggregate_runs(const std::vector<RunMetrics>& runs);  // >= 2 runs

// report.json (full), metrics.csv (metric,mean,std), confusion.csv (mean
// matrix grid, one row per true class).
void write_report(const RunReport& report, const std::filesystem::path& dir);

}  // namespace jelly
