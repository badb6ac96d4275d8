#include "chebnet/dense.hpp"

#include <cmath>
#include <stdexcept>

namespace chebnet {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n, 0.0);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

static void check_mul(const Matrix& a, const Matrix& b, std::size_t a_cols, std::size_t b_rows) {
  if (a_cols != b_rows)
    throw std::invalid_argument("matmul: inner dimensions disagree (" +
                                std::to_string(a.rows) + "x" + std::to_string(a.cols) + " vs " +
                                std::to_string(b.rows) + "x" + std::to_string(b.cols) + ")");
}

void matmul_acc(const Matrix& a, const Matrix& b, Matrix& c) {
  check_mul(a, b, a.cols, b.rows);
  if (c.rows != a.rows || c.cols != b.cols)
    throw std::invalid_argument("matmul_acc: output shape mismatch");
  const std::size_t m = a.rows, k = a.cols, n = b.cols;
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c.data.data() + i * n;
    const double* ai = a.data.data() + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ai[p];
      const double* bp = b.data.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows, b.cols, 0.0);
  matmul_acc(a, b, c);
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  check_mul(a, b, a.rows, b.rows);
  const std::size_t m = a.rows, k = a.cols, n = b.cols;
  Matrix c(k, n, 0.0);
  for (std::size_t r = 0; r < m; ++r) {
    const double* ar = a.data.data() + r * k;
    const double* br = b.data.data() + r * n;
    for (std::size_t i = 0; i < k; ++i) {
      const double av = ar[i];
      double* ci = c.data.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += av * br[j];
    }
  }
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  check_mul(a, b, a.cols, b.cols);
  const std::size_t m = a.rows, k = a.cols, n = b.rows;
  Matrix c(m, n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a.data.data() + i * k;
    double* ci = c.data.data() + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      const double* bj = b.data.data() + j * k;
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += ai[p] * bj[p];
      ci[j] = s;
    }
  }
  return c;
}

static void check_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (!a.same_shape(b)) throw std::invalid_argument(std::string(what) + ": shape mismatch");
}

void add_in_place(Matrix& a, const Matrix& b) {
  check_same_shape(a, b, "add_in_place");
  for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] += b.data[i];
}

void sub_in_place(Matrix& a, const Matrix& b) {
  check_same_shape(a, b, "sub_in_place");
  for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] -= b.data[i];
}

void scale_in_place(Matrix& a, double s) {
  for (auto& x : a.data) x *= s;
}

void axpy(Matrix& a, double s, const Matrix& b) {
  check_same_shape(a, b, "axpy");
  for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] += s * b.data[i];
}

double dot_all(const Matrix& a, const Matrix& b) {
  check_same_shape(a, b, "dot_all");
  double s = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) s += a.data[i] * b.data[i];
  return s;
}

double frobenius_norm(const Matrix& a) {
  double s = 0.0;
  for (const double x : a.data) s += x * x;
  return std::sqrt(s);
}

double max_abs(const Matrix& a) {
  double m = 0.0;
  for (const double x : a.data) m = std::max(m, std::abs(x));
  return m;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  check_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i)
    m = std::max(m, std::abs(a.data[i] - b.data[i]));
  return m;
}

double relative_diff(const Matrix& a, const Matrix& b, double floor) {
  check_same_shape(a, b, "relative_diff");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    num += d * d;
    den += b.data[i] * b.data[i];
  }
  return std::sqrt(num) / std::max(std::sqrt(den), floor);
}

std::span<const double> flat(const Matrix& a) { return {a.data.data(), a.data.size()}; }
std::span<double> flat(Matrix& a) { return {a.data.data(), a.data.size()}; }

}  // namespace chebnet
