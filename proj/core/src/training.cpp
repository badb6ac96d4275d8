#include "chebnet/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "chebnet/rng.hpp"

namespace chebnet {

void TrainConfig::validate() const {
  if (batch_size < 1) throw std::invalid_argument("train config: batch_size must be >= 1");
  if (lr0 < 0.0) throw std::invalid_argument("train config: lr0 must be >= 0");
  if (!(plateau_factor > 0.0 && plateau_factor < 1.0))
    throw std::invalid_argument("train config: plateau_factor must lie in (0,1)");
  if (plateau_patience < 1) throw std::invalid_argument("train config: patience must be >= 1");
  if (min_lr < 0.0) throw std::invalid_argument("train config: min_lr must be >= 0");
  if (max_epochs < 1) throw std::invalid_argument("train config: max_epochs must be >= 1");
  if (seeds.empty()) throw std::invalid_argument("train config: seed list must be non-empty");
}

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads,
               double lr) {
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw std::invalid_argument("adam_step: shape mismatch");
  for (const double g : grads)
    if (!std::isfinite(g))
      throw std::runtime_error("adam_step: non-finite gradient encountered");

  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grads[i];
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grads[i] * grads[i];
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + state.eps);
  }
}

PlateauScheduler::PlateauScheduler(double lr0, double factor, int patience, double min_lr,
                                   bool higher_is_better)
    : lr_(lr0), factor_(factor), min_lr_(min_lr), patience_(patience),
      higher_better_(higher_is_better) {}

double PlateauScheduler::observe(double score) {
  const bool improved =
      !has_best_ || (higher_better_ ? score > best_ : score < best_);
  if (improved) {
    best_ = score;
    has_best_ = true;
    bad_epochs_ = 0;
  } else {
    bad_epochs_ += 1;
    if (bad_epochs_ >= patience_) {
      lr_ *= factor_;
      bad_epochs_ = 0;
    }
  }
  return lr_;
}

double plateau_lr(std::span<const double> history, const TrainConfig& cfg,
                  bool higher_is_better) {
  PlateauScheduler sched(cfg.lr0, cfg.plateau_factor, cfg.plateau_patience, cfg.min_lr,
                         higher_is_better);
  for (const double v : history) sched.observe(v);
  return sched.lr();
}

LossResult loss_node_ce(const Matrix& logits, std::span<const int> labels,
                        std::span<const double> class_weights) {
  const std::size_t n = logits.rows, c = logits.cols;
  if (labels.size() != n) throw std::invalid_argument("node_ce: labels/logits mismatch");
  if (class_weights.size() != c) throw std::invalid_argument("node_ce: weight vector size");

  LossResult res;
  res.grad = Matrix(n, c);
  double weight_total = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    const int y = labels[r];
    if (y < 0 || static_cast<std::size_t>(y) >= c)
      throw std::invalid_argument("node_ce: label out of range");
    weight_total += class_weights[static_cast<std::size_t>(y)];
  }
  if (weight_total <= 0.0) throw std::invalid_argument("node_ce: total class weight is zero");

  double loss = 0.0;
  std::vector<double> probs(c);
  for (std::size_t r = 0; r < n; ++r) {
    const double* zr = logits.data.data() + r * c;
    double zmax = zr[0];
    for (std::size_t j = 1; j < c; ++j) zmax = std::max(zmax, zr[j]);
    double denom = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      probs[j] = std::exp(zr[j] - zmax);
      denom += probs[j];
    }
    const int y = labels[r];
    const double w = class_weights[static_cast<std::size_t>(y)];
    loss += w * (std::log(denom) - (zr[static_cast<std::size_t>(y)] - zmax));
    double* gr = res.grad.data.data() + r * c;
    for (std::size_t j = 0; j < c; ++j) {
      const double p = probs[j] / denom;
      gr[j] = w * (p - (static_cast<int>(j) == y ? 1.0 : 0.0)) / weight_total;
    }
  }
  res.value = loss / weight_total;
  return res;
}

std::vector<double> inverse_frequency_weights(std::span<const int> labels, std::size_t n_classes) {
  std::vector<std::size_t> counts(n_classes, 0);
  for (const int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= n_classes)
      throw std::invalid_argument("class weights: label out of range");
    counts[static_cast<std::size_t>(y)] += 1;
  }
  std::size_t present = 0;
  for (const std::size_t ct : counts) present += (ct > 0);
  std::vector<double> w(n_classes, 0.0);
  if (present == 0) return w;
  for (std::size_t j = 0; j < n_classes; ++j)
    if (counts[j] > 0)
      w[j] = static_cast<double>(labels.size()) /
             (static_cast<double>(present) * static_cast<double>(counts[j]));
  return w;
}

LossResult loss_l1(const Matrix& pred, std::span<const double> target) {
  if (pred.size() != target.size()) throw std::invalid_argument("l1: size mismatch");
  LossResult res;
  res.grad = Matrix(pred.rows, pred.cols);
  const double inv_n = 1.0 / static_cast<double>(pred.size());
  for (std::size_t i = 0; i < pred.data.size(); ++i) {
    const double d = pred.data[i] - target[i];
    res.value += std::abs(d) * inv_n;
    res.grad.data[i] = d > 0.0 ? inv_n : (d < 0.0 ? -inv_n : 0.0);
  }
  return res;
}

LossResult loss_bce_logits(const Matrix& logits, std::span<const int> labels) {
  if (logits.size() != labels.size()) throw std::invalid_argument("bce: size mismatch");
  LossResult res;
  res.grad = Matrix(logits.rows, logits.cols);
  const double inv_n = 1.0 / static_cast<double>(logits.size());
  for (std::size_t i = 0; i < logits.data.size(); ++i) {
    const double z = logits.data[i];
    const double y = labels[i] != 0 ? 1.0 : 0.0;
    res.value += (std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)))) * inv_n;
    const double sig = 1.0 / (1.0 + std::exp(-z));
    res.grad.data[i] = (sig - y) * inv_n;
  }
  return res;
}

std::string metric_name_for(TaskKind task) {
  switch (task) {
    case TaskKind::node_classification: return "weighted_accuracy";
    case TaskKind::graph_regression: return "mae";
    case TaskKind::graph_binary: return "roc_auc";
  }
  return "unknown";
}

bool metric_higher_is_better(TaskKind task) {
  return task != TaskKind::graph_regression;
}

namespace {

std::vector<const Graph*> gather(const Dataset& ds, std::span<const std::size_t> indices,
                                 std::size_t lo, std::size_t hi) {
  std::vector<const Graph*> ptrs;
  ptrs.reserve(hi - lo);
  for (std::size_t i = lo; i < hi; ++i) ptrs.push_back(&ds.graphs[indices[i]]);
  return ptrs;
}

std::vector<double> graph_targets(std::span<const Graph* const> graphs) {
  std::vector<double> t;
  t.reserve(graphs.size());
  for (const Graph* g : graphs) {
    if (!g->graph_label) throw std::invalid_argument("graph task: graph_label missing");
    t.push_back(*g->graph_label);
  }
  return t;
}

LossResult batch_loss(const ModelSpec& spec, const Matrix& out, const BatchedGraph& bg,
                      std::span<const Graph* const> members) {
  switch (spec.task) {
    case TaskKind::node_classification: {
      const std::vector<int>& labels = bg.merged.node_labels;
      if (labels.size() != out.rows)
        throw std::invalid_argument("node task: labels missing on batch");
      const std::vector<double> w = inverse_frequency_weights(labels, spec.output_dim());
      return loss_node_ce(out, labels, w);
    }
    case TaskKind::graph_regression: {
      const std::vector<double> targets = graph_targets(members);
      return loss_l1(out, targets);
    }
    case TaskKind::graph_binary: {
      const std::vector<double> targets = graph_targets(members);
      std::vector<int> labels(targets.size());
      for (std::size_t i = 0; i < targets.size(); ++i) labels[i] = targets[i] != 0.0 ? 1 : 0;
      return loss_bce_logits(out, labels);
    }
  }
  throw std::logic_error("unreachable");
}

}  // namespace

double evaluate(Model& model, const Dataset& ds, std::span<const std::size_t> indices,
                std::size_t batch_size) {
  if (indices.empty()) throw std::invalid_argument("evaluate: empty index set");
  std::vector<int> all_preds, all_labels;
  std::vector<double> all_scores, all_targets;

  for (std::size_t lo = 0; lo < indices.size(); lo += batch_size) {
    const std::size_t hi = std::min(lo + batch_size, indices.size());
    const std::vector<const Graph*> members = gather(ds, indices, lo, hi);
    const BatchedGraph bg = batch(std::span<const Graph* const>(members));
    const Matrix out = model_forward(model, bg, /*training=*/false);

    switch (model.spec.task) {
      case TaskKind::node_classification: {
        for (std::size_t r = 0; r < out.rows; ++r) {
          const double* zr = out.data.data() + r * out.cols;
          std::size_t arg = 0;
          for (std::size_t j = 1; j < out.cols; ++j)
            if (zr[j] > zr[arg]) arg = j;
          all_preds.push_back(static_cast<int>(arg));
          all_labels.push_back(bg.merged.node_labels[r]);
        }
        break;
      }
      case TaskKind::graph_regression: {
        const std::vector<double> targets = graph_targets(members);
        for (std::size_t r = 0; r < out.rows; ++r) {
          all_scores.push_back(out(r, 0));
          all_targets.push_back(targets[r]);
        }
        break;
      }
      case TaskKind::graph_binary: {
        const std::vector<double> targets = graph_targets(members);
        for (std::size_t r = 0; r < out.rows; ++r) {
          all_scores.push_back(out(r, 0));
          all_labels.push_back(targets[r] != 0.0 ? 1 : 0);
        }
        break;
      }
    }
  }

  switch (model.spec.task) {
    case TaskKind::node_classification: return metric_weighted_accuracy(all_preds, all_labels);
    case TaskKind::graph_regression: return metric_mae(all_scores, all_targets);
    case TaskKind::graph_binary: return metric_roc_auc(all_scores, all_labels);
  }
  throw std::logic_error("unreachable");
}

TrainResult train(const ModelSpec& spec, const Dataset& ds, const TrainConfig& cfg) {
  cfg.validate();
  if (ds.splits.train.empty() || ds.splits.val.empty() || ds.splits.test.empty())
    throw std::invalid_argument("train: dataset needs non-empty train/val/test splits");

  const bool higher_better = metric_higher_is_better(spec.task);
  TrainResult result;

  for (const std::uint64_t seed : cfg.seeds) {
    SeedRun run;
    run.seed = seed;

    Model model = build_model(spec, seed);
    AdamState adam(model.params.size());
    PlateauScheduler sched(cfg.lr0, cfg.plateau_factor, cfg.plateau_patience, cfg.min_lr,
                           higher_better);
    Rng shuffle_rng(derive_seed(seed, 0xBA7C4));
    double best = higher_better ? -std::numeric_limits<double>::infinity()
                                : std::numeric_limits<double>::infinity();

    std::vector<std::size_t> order(ds.splits.train.begin(), ds.splits.train.end());

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
      const double lr_epoch = sched.lr();
      shuffle_rng.shuffle(order);

      double loss_sum = 0.0;
      std::size_t n_batches = 0;
      for (std::size_t lo = 0; lo < order.size() && !run.diverged; lo += cfg.batch_size) {
        const std::size_t hi = std::min(lo + cfg.batch_size, order.size());
        const std::vector<const Graph*> members = gather(ds, order, lo, hi);
        const BatchedGraph bg = batch(std::span<const Graph* const>(members));

        ForwardCtx ctx;
        const Matrix out = model_forward(model, bg, /*training=*/true, &ctx);
        LossResult loss = batch_loss(spec, out, bg, members);
        if (!std::isfinite(loss.value)) {
          run.diverged = true;
          run.diagnostic = "non-finite loss at epoch " + std::to_string(epoch);
          break;
        }
        zero_grad(model);
        model_backward(model, ctx, loss.grad);
        try {
          adam_step(adam, model.params, model.grads, lr_epoch);
        } catch (const std::runtime_error& e) {
          run.diverged = true;
          run.diagnostic = std::string(e.what()) + " at epoch " + std::to_string(epoch);
          break;
        }
        loss_sum += loss.value;
        n_batches += 1;
      }
      if (run.diverged) break;

      const double val = evaluate(model, ds, ds.splits.val, cfg.batch_size);
      const double test = evaluate(model, ds, ds.splits.test, cfg.batch_size);
      run.log.push_back({epoch, lr_epoch, loss_sum / static_cast<double>(std::max<std::size_t>(n_batches, 1)),
                         val, test});

      if (higher_better ? val > best : val < best) {
        best = val;
        run.best_epoch = epoch;
        run.best_val = val;
        run.best_params = model.params;
        run.best_buffers = model.buffers;
      }
      if (sched.observe(val) < cfg.min_lr) break;
    }

    if (!run.diverged && run.best_epoch > 0) {
      model.params = run.best_params;
      model.buffers = run.best_buffers;
      run.test_metric = evaluate(model, ds, ds.splits.test, cfg.batch_size);
    }
    result.runs.push_back(std::move(run));
  }

  std::vector<double> per_seed;
  for (const SeedRun& r : result.runs)
    if (!r.diverged) per_seed.push_back(r.test_metric);
  result.report = MetricReport::from(metric_name_for(spec.task), std::move(per_seed));
  return result;
}

}  // namespace chebnet
