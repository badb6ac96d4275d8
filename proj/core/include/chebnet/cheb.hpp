#pragma once

#include <vector>

#include "chebnet/graph.hpp"

namespace chebnet {

/// Coefficients theta_0 .. theta_k of a degree-k Chebyshev filter
/// g(x) = sum_i theta_i T_i(x).
struct ChebCoeffs {
  std::vector<double> theta;
  std::size_t order() const { return theta.empty() ? 0 : theta.size() - 1; }
};

/// Forward-pass record: the polynomial signals T_0(S)h .. T_k(S)h.
/// terms[0] is the input signal itself.
struct ChebTape {
  std::vector<Matrix> terms;
};

struct ChebResult {
  Matrix output;
  ChebTape tape;
};

/// Applies the filter through the three-term recursion
/// T_0 = h, T_1 = S h, T_i = 2 S T_{i-1} - T_{i-2}; k sparse products total.
ChebResult cheb_apply(const ScaledLaplacian& lap, const ChebCoeffs& coeffs, const Matrix& h);

struct ChebGradients {
  std::vector<double> theta;  // d loss / d theta_i
  Matrix signal;              // d loss / d h
};

/// Reverse sweep of the recursion. grad_theta[i] = <grad_out, T_i(S) h>;
/// grad_h accumulates sum_i theta_i T_i(S) grad_out (S symmetric) by walking
/// the recursion backwards, k sparse products again.
ChebGradients cheb_backward(const ChebTape& tape, const ScaledLaplacian& lap,
                            const ChebCoeffs& coeffs, const Matrix& grad_out);

/// Scalar recursion: g(x) at one point.
double chebyshev_eval(std::span<const double> theta, double x);

/// Test-only reference path: eigendecomposes the (densified) operator and
/// applies the filter in the spectral basis. Limited to n <= 512.
Matrix dense_spectral_oracle(const SparseMatrix& scaled, const ChebCoeffs& coeffs,
                             const Matrix& h);

}  // namespace chebnet
