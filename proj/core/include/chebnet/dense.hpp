#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace chebnet {

/// Row-major dense matrix of doubles. The workhorse container for node
/// feature blocks (n_nodes x channels) and small parameter tensors.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
  std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }

  std::size_t size() const { return data.size(); }
  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }

  static Matrix identity(std::size_t n);
};

/// c = a * b
Matrix matmul(const Matrix& a, const Matrix& b);
/// c += a * b
void matmul_acc(const Matrix& a, const Matrix& b, Matrix& c);
/// c = a^T * b  (a is m x k, b is m x n, result k x n)
Matrix matmul_tn(const Matrix& a, const Matrix& b);
/// c = a * b^T  (a is m x k, b is n x k, result m x n)
Matrix matmul_nt(const Matrix& a, const Matrix& b);

void add_in_place(Matrix& a, const Matrix& b);
void sub_in_place(Matrix& a, const Matrix& b);
void scale_in_place(Matrix& a, double s);
/// a += s * b
void axpy(Matrix& a, double s, const Matrix& b);

/// Sum of elementwise products over the whole matrix (flattened dot).
double dot_all(const Matrix& a, const Matrix& b);
double frobenius_norm(const Matrix& a);
double max_abs(const Matrix& a);
double max_abs_diff(const Matrix& a, const Matrix& b);
/// ||a - b||_F / max(||b||_F, floor)
double relative_diff(const Matrix& a, const Matrix& b, double floor = 1e-300);

std::span<const double> flat(const Matrix& a);
std::span<double> flat(Matrix& a);

}  // namespace chebnet
