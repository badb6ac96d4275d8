#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "chebnet/cheb.hpp"
#include "chebnet/spectral.hpp"
#include "chebnet/training.hpp"

namespace chebnet {

enum class PerturbKind { weight_noise, edge_toggle };

std::string to_string(PerturbKind k);
PerturbKind perturb_kind_from_string(std::string_view s);

/// A realized symmetric perturbation E with ||E|| rescaled onto the target.
struct Perturbation {
  PerturbKind kind = PerturbKind::weight_noise;
  double target_eps = 0.0;
  SparseMatrix e;
  double realized_norm = 0.0;  // power-iteration estimate, within 1% of target
};

struct PerturbResult {
  SparseMatrix perturbed;  // L + E
  Perturbation info;
};

/// weight_noise draws a symmetric Gaussian perturbation on the support of L
/// (diagonal included); edge_toggle flips a few off-diagonal pairs (removing
/// present entries, inserting new ones). Either way E is rescaled so that
/// ||E|| = eps before L + E is formed.
PerturbResult perturb_laplacian(const SparseMatrix& lap, PerturbKind kind, double eps,
                                std::uint64_t seed, const PowerIterOptions& norm_opts = {});

struct FilterDistance {
  double value = 0.0;
  bool converged = false;
};

/// Spectral norm of h -> g(A)h - g(B)h, estimated matrix-free by power
/// iteration on the symmetric difference operator.
FilterDistance filter_distance(const ChebCoeffs& coeffs, const ScaledLaplacian& a,
                               const ScaledLaplacian& b, const PowerIterOptions& opts = {});

struct StabilityRow {
  double eps = 0.0;
  double realized_norm = 0.0;
  double mean_distance = 0.0;
  double std_distance = 0.0;
  double ratio = 0.0;  // mean_distance / realized_norm
};

struct StabilityReport {
  std::vector<StabilityRow> rows;  // sorted by eps
  bool slope_defined = false;      // needs >= 2 eps values
  double slope = 0.0;              // log-log least squares
  double intercept = 0.0;
  double r2 = 0.0;
  bool all_converged = true;

  /// "epsilon,realized_norm,mean_distance,std_distance,ratio" rows plus a
  /// trailing "# slope=... intercept=... r2=..." summary line.
  std::string to_csv() const;
};

/// Averages filter_distance over `trials` perturbations per epsilon and fits
/// the log-log distance-vs-norm line.
StabilityReport stability_sweep(const SparseMatrix& lap, const ChebCoeffs& coeffs,
                                std::span<const double> eps_list, std::size_t trials,
                                std::uint64_t seed, PerturbKind kind = PerturbKind::weight_noise,
                                const PowerIterOptions& opts = {});

struct TransferProtocol {
  std::size_t n_train = 120;
  std::size_t n_val = 24;
  std::size_t n_test = 24;
  std::size_t n_eval_large = 48;
};

/// Train on the small-graph distribution, evaluate each seed's best
/// checkpoint on the held-out small test split and on a freshly generated
/// large-graph set drawn from the same (p, q) model.
struct TransferResult {
  MetricReport small_test;
  MetricReport large_eval;
  double gap = 0.0;  // small mean - large mean (signed)
  TrainResult training;
};

TransferResult size_transfer(const SbmConfig& small_cfg, const SbmConfig& large_cfg,
                             const ModelSpec& spec, const TrainConfig& tcfg,
                             const TransferProtocol& protocol = {});

}  // namespace chebnet
