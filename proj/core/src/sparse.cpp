#include "chebnet/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace chebnet {

SparseMatrix SparseMatrix::identity(std::size_t n) {
  SparseMatrix m;
  m.n = n;
  m.offsets.resize(n + 1);
  m.indices.resize(n);
  m.values.assign(n, 1.0);
  for (std::size_t i = 0; i <= n; ++i) m.offsets[i] = i;
  for (std::size_t i = 0; i < n; ++i) m.indices[i] = i;
  return m;
}

double SparseMatrix::at(std::size_t i, std::size_t j) const {
  const auto begin = indices.begin() + static_cast<std::ptrdiff_t>(offsets[i]);
  const auto end = indices.begin() + static_cast<std::ptrdiff_t>(offsets[i + 1]);
  const auto it = std::lower_bound(begin, end, j);
  if (it == end || *it != j) return 0.0;
  return values[static_cast<std::size_t>(it - indices.begin())];
}

void validate_csr(const SparseMatrix& m) {
  if (m.offsets.size() != m.n + 1) throw std::invalid_argument("csr: offsets size must be n+1");
  if (m.offsets.front() != 0 || m.offsets.back() != m.indices.size())
    throw std::invalid_argument("csr: offsets must start at 0 and end at nnz");
  if (m.indices.size() != m.values.size())
    throw std::invalid_argument("csr: indices/values length mismatch");
  for (std::size_t r = 0; r < m.n; ++r) {
    if (m.offsets[r] > m.offsets[r + 1]) throw std::invalid_argument("csr: offsets not monotone");
    for (std::size_t k = m.offsets[r]; k < m.offsets[r + 1]; ++k) {
      if (m.indices[k] >= m.n) throw std::invalid_argument("csr: column index out of range");
      if (k > m.offsets[r] && m.indices[k] <= m.indices[k - 1])
        throw std::invalid_argument("csr: column indices not strictly increasing in row");
    }
  }
}

bool is_symmetric(const SparseMatrix& m, double tol) {
  for (std::size_t r = 0; r < m.n; ++r)
    for (std::size_t k = m.offsets[r]; k < m.offsets[r + 1]; ++k) {
      const std::size_t c = m.indices[k];
      if (std::abs(m.at(c, r) - m.values[k]) > tol) return false;
    }
  return true;
}

Matrix spmm(const SparseMatrix& m, const Matrix& x) {
  if (m.n != x.rows) throw std::invalid_argument("spmm: dimension mismatch");
  Matrix y(m.n, x.cols, 0.0);
  const std::size_t d = x.cols;
  for (std::size_t r = 0; r < m.n; ++r) {
    double* yr = y.data.data() + r * d;
    for (std::size_t k = m.offsets[r]; k < m.offsets[r + 1]; ++k) {
      const double w = m.values[k];
      const double* xc = x.data.data() + m.indices[k] * d;
      for (std::size_t j = 0; j < d; ++j) yr[j] += w * xc[j];
    }
  }
  return y;
}

void spmv(const SparseMatrix& m, std::span<const double> x, std::span<double> y) {
  if (x.size() != m.n || y.size() != m.n) throw std::invalid_argument("spmv: dimension mismatch");
  for (std::size_t r = 0; r < m.n; ++r) {
    double s = 0.0;
    for (std::size_t k = m.offsets[r]; k < m.offsets[r + 1]; ++k)
      s += m.values[k] * x[m.indices[k]];
    y[r] = s;
  }
}

Matrix to_dense(const SparseMatrix& m) {
  Matrix d(m.n, m.n, 0.0);
  for (std::size_t r = 0; r < m.n; ++r)
    for (std::size_t k = m.offsets[r]; k < m.offsets[r + 1]; ++k)
      d(r, m.indices[k]) = m.values[k];
  return d;
}

SparseMatrix block_diag(std::span<const SparseMatrix* const> blocks) {
  SparseMatrix out;
  std::size_t n = 0, nnz = 0;
  for (const SparseMatrix* b : blocks) {
    n += b->n;
    nnz += b->nnz();
  }
  out.n = n;
  out.offsets.reserve(n + 1);
  out.indices.reserve(nnz);
  out.values.reserve(nnz);
  out.offsets.push_back(0);
  std::size_t base = 0;
  for (const SparseMatrix* b : blocks) {
    for (std::size_t r = 0; r < b->n; ++r) {
      for (std::size_t k = b->offsets[r]; k < b->offsets[r + 1]; ++k) {
        out.indices.push_back(base + b->indices[k]);
        out.values.push_back(b->values[k]);
      }
      out.offsets.push_back(out.indices.size());
    }
    base += b->n;
  }
  return out;
}

SparseMatrix block_diag(const std::vector<SparseMatrix>& blocks) {
  std::vector<const SparseMatrix*> ptrs;
  ptrs.reserve(blocks.size());
  for (const auto& b : blocks) ptrs.push_back(&b);
  return block_diag(std::span<const SparseMatrix* const>(ptrs));
}

SparseMatrix csr_add(const SparseMatrix& a, const SparseMatrix& b) {
  if (a.n != b.n) throw std::invalid_argument("csr_add: dimension mismatch");
  SparseMatrix out;
  out.n = a.n;
  out.offsets.reserve(a.n + 1);
  out.offsets.push_back(0);
  out.indices.reserve(a.nnz() + b.nnz());
  out.values.reserve(a.nnz() + b.nnz());
  for (std::size_t r = 0; r < a.n; ++r) {
    std::size_t i = a.offsets[r], j = b.offsets[r];
    const std::size_t ie = a.offsets[r + 1], je = b.offsets[r + 1];
    while (i < ie || j < je) {
      if (j >= je || (i < ie && a.indices[i] < b.indices[j])) {
        out.indices.push_back(a.indices[i]);
        out.values.push_back(a.values[i]);
        ++i;
      } else if (i >= ie || b.indices[j] < a.indices[i]) {
        out.indices.push_back(b.indices[j]);
        out.values.push_back(b.values[j]);
        ++j;
      } else {
        out.indices.push_back(a.indices[i]);
        out.values.push_back(a.values[i] + b.values[j]);
        ++i;
        ++j;
      }
    }
    out.offsets.push_back(out.indices.size());
  }
  return out;
}

SparseMatrix csr_scale(const SparseMatrix& a, double s) {
  SparseMatrix out = a;
  for (auto& v : out.values) v *= s;
  return out;
}

}  // namespace chebnet
