#include "chebnet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

namespace chebnet {

double metric_weighted_accuracy(std::span<const int> preds, std::span<const int> labels) {
  if (preds.size() != labels.size())
    throw std::invalid_argument("weighted_accuracy: size mismatch");
  if (labels.empty()) throw std::invalid_argument("weighted_accuracy: empty input");
  std::map<int, std::pair<std::size_t, std::size_t>> per_class;  // label -> (correct, total)
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto& [correct, total] = per_class[labels[i]];
    total += 1;
    if (preds[i] == labels[i]) correct += 1;
  }
  double acc = 0.0;
  for (const auto& [cls, counts] : per_class)
    acc += static_cast<double>(counts.first) / static_cast<double>(counts.second);
  return acc / static_cast<double>(per_class.size());
}

double metric_mae(std::span<const double> pred, std::span<const double> target) {
  if (pred.size() != target.size()) throw std::invalid_argument("mae: size mismatch");
  if (pred.empty()) throw std::invalid_argument("mae: empty input");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += std::abs(pred[i] - target[i]);
  return s / static_cast<double>(pred.size());
}

double metric_roc_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("roc_auc: size mismatch");
  std::size_t n_pos = 0, n_neg = 0;
  for (const int y : labels) (y != 0 ? n_pos : n_neg) += 1;
  if (n_pos == 0 || n_neg == 0)
    throw std::invalid_argument("roc_auc: needs both positive and negative labels");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // average ranks within tie groups; Mann-Whitney U equals pairwise
  // concordance with half credit for ties
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // 1-based ranks i+1..j
    for (std::size_t t = i; t < j; ++t)
      if (labels[order[t]] != 0) rank_sum_pos += avg_rank;
    i = j;
  }
  const double u = rank_sum_pos - static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1.0) / 2.0;
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double metric_ap(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("ap: size mismatch");
  std::size_t n_pos = 0;
  for (const int y : labels) n_pos += (y != 0);
  if (n_pos == 0) throw std::invalid_argument("ap: needs at least one positive label");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });

  double ap = 0.0;
  std::size_t hits = 0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    if (labels[order[rank]] != 0) {
      hits += 1;
      ap += static_cast<double>(hits) / static_cast<double>(rank + 1);
    }
  }
  return ap / static_cast<double>(n_pos);
}

MetricReport MetricReport::from(std::string name, std::vector<double> values) {
  MetricReport r;
  r.name = std::move(name);
  r.per_seed = std::move(values);
  if (r.per_seed.empty()) return r;
  double sum = 0.0;
  for (const double v : r.per_seed) sum += v;
  r.mean = sum / static_cast<double>(r.per_seed.size());
  double sq = 0.0;
  for (const double v : r.per_seed) sq += (v - r.mean) * (v - r.mean);
  r.stddev = std::sqrt(sq / static_cast<double>(r.per_seed.size()));
  return r;
}

}  // namespace chebnet
