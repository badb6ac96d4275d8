#include "chebnet/cheb.hpp"

#include <cmath>
#include <stdexcept>

#include "chebnet/spectral.hpp"

namespace chebnet {

static void check_coeffs(const ChebCoeffs& c) {
  if (c.theta.empty()) throw std::invalid_argument("cheb: coefficient vector must be non-empty");
  for (const double t : c.theta)
    if (!std::isfinite(t)) throw std::invalid_argument("cheb: non-finite coefficient");
}

ChebResult cheb_apply(const ScaledLaplacian& lap, const ChebCoeffs& coeffs, const Matrix& h) {
  check_coeffs(coeffs);
  if (lap.matrix.n != h.rows)
    throw std::invalid_argument("cheb_apply: operator dimension != signal rows");

  const std::size_t k = coeffs.order();
  ChebResult res;
  res.tape.terms.reserve(k + 1);
  res.tape.terms.push_back(h);  // T_0 = h
  if (k >= 1) res.tape.terms.push_back(spmm(lap.matrix, h));  // T_1 = S h
  for (std::size_t i = 2; i <= k; ++i) {
    Matrix t = spmm(lap.matrix, res.tape.terms[i - 1]);
    scale_in_place(t, 2.0);
    sub_in_place(t, res.tape.terms[i - 2]);
    res.tape.terms.push_back(std::move(t));
  }

  res.output = Matrix(h.rows, h.cols, 0.0);
  for (std::size_t i = 0; i <= k; ++i) axpy(res.output, coeffs.theta[i], res.tape.terms[i]);
  return res;
}

ChebGradients cheb_backward(const ChebTape& tape, const ScaledLaplacian& lap,
                            const ChebCoeffs& coeffs, const Matrix& grad_out) {
  check_coeffs(coeffs);
  const std::size_t k = coeffs.order();
  if (tape.terms.size() != k + 1)
    throw std::invalid_argument("cheb_backward: tape and coefficients disagree");
  for (const Matrix& t : tape.terms)
    if (!t.same_shape(grad_out))
      throw std::invalid_argument("cheb_backward: tape shape does not match grad_out");

  ChebGradients grads;
  grads.theta.resize(k + 1);
  for (std::size_t i = 0; i <= k; ++i) grads.theta[i] = dot_all(grad_out, tape.terms[i]);

  // adjoints of the recursion T_i = 2 S T_{i-1} - T_{i-2}
  std::vector<Matrix> tbar(k + 1);
  for (std::size_t i = 0; i <= k; ++i) {
    tbar[i] = grad_out;
    scale_in_place(tbar[i], coeffs.theta[i]);
  }
  for (std::size_t i = k; i >= 2; --i) {
    Matrix prop = spmm(lap.matrix, tbar[i]);
    axpy(tbar[i - 1], 2.0, prop);
    axpy(tbar[i - 2], -1.0, tbar[i]);
  }
  if (k >= 1) {
    Matrix prop = spmm(lap.matrix, tbar[1]);
    add_in_place(tbar[0], prop);
  }
  grads.signal = std::move(tbar[0]);
  return grads;
}

double chebyshev_eval(std::span<const double> theta, double x) {
  if (theta.empty()) return 0.0;
  double tm2 = 1.0;  // T_0
  double acc = theta[0];
  if (theta.size() == 1) return acc;
  double tm1 = x;  // T_1
  acc += theta[1] * tm1;
  for (std::size_t i = 2; i < theta.size(); ++i) {
    const double t = 2.0 * x * tm1 - tm2;
    acc += theta[i] * t;
    tm2 = tm1;
    tm1 = t;
  }
  return acc;
}

Matrix dense_spectral_oracle(const SparseMatrix& scaled, const ChebCoeffs& coeffs,
                             const Matrix& h) {
  check_coeffs(coeffs);
  if (scaled.n > 512)
    throw std::invalid_argument("dense_spectral_oracle: n exceeds the dense limit of 512");
  if (scaled.n != h.rows)
    throw std::invalid_argument("dense_spectral_oracle: dimension mismatch");

  const EigenDecomposition eig = jacobi_eigh(to_dense(scaled));
  const std::size_t n = scaled.n;

  // U diag(g(lambda)) U^T h
  Matrix ut_h = matmul_tn(eig.eigenvectors, h);
  for (std::size_t j = 0; j < n; ++j) {
    const double gj = chebyshev_eval(coeffs.theta, eig.eigenvalues[j]);
    for (std::size_t c = 0; c < h.cols; ++c) ut_h(j, c) *= gj;
  }
  return matmul(eig.eigenvectors, ut_h);
}

}  // namespace chebnet
