#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "chebnet/dense.hpp"

namespace chebnet {

/// Square sparse matrix in CSR form. Column indices are strictly increasing
/// within each row; Laplacian constructors produce symmetric instances.
struct SparseMatrix {
  std::size_t n = 0;
  std::vector<std::size_t> offsets;  // n + 1 entries
  std::vector<std::size_t> indices;
  std::vector<double> values;

  std::size_t nnz() const { return indices.size(); }
  static SparseMatrix identity(std::size_t n);

  /// Value at (i, j); binary search over the row, 0.0 when absent.
  double at(std::size_t i, std::size_t j) const;
};

/// Throws std::invalid_argument when the CSR structure is malformed.
void validate_csr(const SparseMatrix& m);
bool is_symmetric(const SparseMatrix& m, double tol = 0.0);

/// Sparse x dense. Accumulation runs in ascending column-index order per row,
/// so results are reproducible bit-for-bit regardless of scheduling.
Matrix spmm(const SparseMatrix& m, const Matrix& x);
void spmv(const SparseMatrix& m, std::span<const double> x, std::span<double> y);

Matrix to_dense(const SparseMatrix& m);

/// Block-diagonal union; blocks keep their internal ordering.
SparseMatrix block_diag(std::span<const SparseMatrix* const> blocks);
SparseMatrix block_diag(const std::vector<SparseMatrix>& blocks);

/// a + b over the union of both supports (exact zeros are kept).
SparseMatrix csr_add(const SparseMatrix& a, const SparseMatrix& b);

/// Entrywise scale.
SparseMatrix csr_scale(const SparseMatrix& a, double s);

}  // namespace chebnet
