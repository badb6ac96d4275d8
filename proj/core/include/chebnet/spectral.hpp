#pragma once

#include <cstdint>
#include <functional>
#include <span>

#include "chebnet/dense.hpp"

namespace chebnet {

/// a = eigenvectors * diag(eigenvalues) * eigenvectors^T, eigenvalues ascending.
struct EigenDecomposition {
  std::vector<double> eigenvalues;
  Matrix eigenvectors;  // columns
};

/// Cyclic Jacobi rotations for symmetric matrices. Intended for the dense
/// oracle and test suites (n <= 512); accuracy near machine precision.
EigenDecomposition jacobi_eigh(const Matrix& sym, int max_sweeps = 64);

struct PowerIterOptions {
  int max_iters = 200;
  double rel_tol = 1e-8;
  std::uint64_t seed = 0x5EEDCAFEull;
};

struct PowerIterResult {
  double value = 0.0;
  bool converged = false;
  int iterations = 0;
};

using LinearOperator = std::function<void(std::span<const double>, std::span<double>)>;

/// Spectral norm of a symmetric operator, matrix-free. Iterates on the
/// squared operator so +/- eigenvalue pairs of equal magnitude cannot stall
/// the iteration; the Rayleigh estimate is ||Av||_2 for unit v.
PowerIterResult spectral_norm_sym(std::size_t n, const LinearOperator& apply,
                                  const PowerIterOptions& opts = {});

}  // namespace chebnet
