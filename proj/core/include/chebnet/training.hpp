#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "chebnet/data.hpp"
#include "chebnet/metrics.hpp"
#include "chebnet/nn.hpp"

namespace chebnet {

struct TrainConfig {
  std::size_t batch_size = 128;
  double lr0 = 1e-3;
  double plateau_factor = 0.5;
  int plateau_patience = 5;
  double min_lr = 1e-5;
  int max_epochs = 100;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4};

  void validate() const;
};

struct AdamState {
  std::vector<double> m, v;
  long step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

/// Bias-corrected Adam update: params -= lr * m_hat / (sqrt(v_hat) + eps).
/// Throws on non-finite gradients (training aborts the seed with a diagnostic).
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads,
               double lr);

/// Halves the learning rate after `patience` consecutive epochs without
/// improvement of the validation score. The training loop stops before
/// running an epoch below min_lr, which is how the floor manifests.
class PlateauScheduler {
 public:
  PlateauScheduler(double lr0, double factor, int patience, double min_lr, bool higher_is_better);
  /// Feed this epoch's validation score; returns the lr for the next epoch.
  double observe(double score);
  double lr() const { return lr_; }

 private:
  double lr_, factor_, min_lr_;
  int patience_, bad_epochs_ = 0;
  bool higher_better_, has_best_ = false;
  double best_ = 0.0;
};

/// Pure replay of the plateau rule over a full validation history.
double plateau_lr(std::span<const double> history, const TrainConfig& cfg, bool higher_is_better);

// ---- losses (value + gradient wrt the model output) ----

struct LossResult {
  double value = 0.0;
  Matrix grad;
};

/// Weighted softmax cross-entropy over per-node logits; the weighted mean
/// uses sum of per-sample weights as the normalizer.
LossResult loss_node_ce(const Matrix& logits, std::span<const int> labels,
                        std::span<const double> class_weights);

/// w_c = N / (C_present * count_c) for classes present in `labels`, 0 otherwise.
std::vector<double> inverse_frequency_weights(std::span<const int> labels, std::size_t n_classes);

/// Mean absolute error; subgradient at 0 taken as 0.
LossResult loss_l1(const Matrix& pred, std::span<const double> target);

/// Numerically stable binary cross-entropy on logits.
LossResult loss_bce_logits(const Matrix& logits, std::span<const int> labels);

// ---- train / evaluate ----

struct EpochRow {
  int epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double val_metric = 0.0;
  double test_metric = 0.0;
};

struct SeedRun {
  std::uint64_t seed = 0;
  std::vector<EpochRow> log;
  int best_epoch = -1;
  double best_val = 0.0;
  double test_metric = 0.0;
  bool diverged = false;
  std::string diagnostic;
  std::vector<double> best_params;
  std::vector<double> best_buffers;
};

struct TrainResult {
  MetricReport report;  // test metric at the best-validation checkpoint, per seed
  std::vector<SeedRun> runs;
};

std::string metric_name_for(TaskKind task);
bool metric_higher_is_better(TaskKind task);

/// Full protocol: for each seed, re-initialize the model, run epochs of
/// shuffled fixed-size graph batches, track the best-validation checkpoint,
/// and report the test metric of that checkpoint. Stops early once the lr
/// falls below min_lr. Deterministic for fixed seeds.
TrainResult train(const ModelSpec& spec, const Dataset& ds, const TrainConfig& cfg);

/// Metric of a frozen model over the given graph indices (eval mode).
double evaluate(Model& model, const Dataset& ds, std::span<const std::size_t> indices,
                std::size_t batch_size = 128);

}  // namespace chebnet
