#include "chebnet/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "chebnet/rng.hpp"

namespace chebnet {

EigenDecomposition jacobi_eigh(const Matrix& sym, int max_sweeps) {
  if (sym.rows != sym.cols) throw std::invalid_argument("jacobi_eigh: matrix must be square");
  const std::size_t n = sym.rows;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(sym(i, j) - sym(j, i)) > 1e-12 * std::max(1.0, max_abs(sym)))
        throw std::invalid_argument("jacobi_eigh: matrix not symmetric");

  Matrix a = sym;
  Matrix v = Matrix::identity(n);

  double frob = frobenius_norm(a);
  const double stop = std::max(frob, 1.0) * 1e-15;

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    if (std::sqrt(2.0 * off) <= stop) break;

    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double app = a(p, p), aqq = a(q, q);
        const double tau = (aqq - app) / (2.0 * apq);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;

        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  EigenDecomposition out;
  out.eigenvalues.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.eigenvalues[i] = a(i, i);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return out.eigenvalues[x] < out.eigenvalues[y];
  });

  EigenDecomposition sorted;
  sorted.eigenvalues.resize(n);
  sorted.eigenvectors = Matrix(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    sorted.eigenvalues[j] = out.eigenvalues[order[j]];
    for (std::size_t i = 0; i < n; ++i) sorted.eigenvectors(i, j) = v(i, order[j]);
  }
  return sorted;
}

PowerIterResult spectral_norm_sym(std::size_t n, const LinearOperator& apply,
                                  const PowerIterOptions& opts) {
  PowerIterResult res;
  if (n == 0) {
    res.converged = true;
    return res;
  }
  Rng rng(opts.seed);
  std::vector<double> v = rng.normal_vector(n);
  std::vector<double> w(n), w2(n);

  auto norm2 = [](std::span<const double> x) {
    double s = 0.0;
    for (const double e : x) s += e * e;
    return std::sqrt(s);
  };

  double nv = norm2(v);
  for (auto& x : v) x /= nv;

  double est = 0.0;
  for (int it = 1; it <= opts.max_iters; ++it) {
    apply(v, w);
    const double nw = norm2(w);  // = sqrt(v' A^2 v): lower estimate of ||A||
    res.iterations = it;
    if (nw == 0.0) {
      res.value = 0.0;
      res.converged = true;
      return res;
    }
    apply(w, w2);  // power step on A^2
    const double nw2 = norm2(w2);
    const bool settled = it > 1 && std::abs(nw - est) <= opts.rel_tol * std::max(nw, 1e-300);
    est = nw;
    if (settled) {
      res.converged = true;
      break;
    }
    if (nw2 == 0.0) {
      // A^2 v vanished; nw is exact on the remaining subspace
      res.converged = true;
      break;
    }
    for (std::size_t i = 0; i < n; ++i) v[i] = w2[i] / nw2;
  }
  res.value = est;
  return res;
}

}  // namespace chebnet
