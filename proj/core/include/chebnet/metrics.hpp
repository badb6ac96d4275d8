#pragma once

#include <span>
#include <string>
#include <vector>

namespace chebnet {

/// Class-balanced accuracy: arithmetic mean of per-class recall over the
/// classes that actually appear in `labels`.
double metric_weighted_accuracy(std::span<const int> preds, std::span<const int> labels);

double metric_mae(std::span<const double> pred, std::span<const double> target);

/// Exact pairwise-concordance AUC (ties count 1/2), computed via average
/// ranks in O(n log n).
double metric_roc_auc(std::span<const double> scores, std::span<const int> labels);

/// Non-interpolated average precision by rank summation. Ties broken by
/// (score descending, original index ascending).
double metric_ap(std::span<const double> scores, std::span<const int> labels);

/// Aggregate of one metric over several seeded runs. stddev is the population
/// standard deviation of the per-seed values.
struct MetricReport {
  std::string name;
  std::vector<double> per_seed;
  double mean = 0.0;
  double stddev = 0.0;

  static MetricReport from(std::string name, std::vector<double> values);
};

}  // namespace chebnet
