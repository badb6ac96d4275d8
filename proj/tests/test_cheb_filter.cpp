#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "chebnet/cheb.hpp"
#include "chebnet/spectral.hpp"
#include "support/reference.hpp"

using namespace chebnet;

namespace {

ScaledLaplacian random_operator(Rng& rng, std::size_t n, double chord_p = 0.25) {
  const Graph g = testref::random_connected_graph(rng, n, chord_p, rng.bernoulli(0.5));
  return scaled_laplacian(normalized_laplacian(g), 2.0);
}

ChebCoeffs random_coeffs(Rng& rng, std::size_t order) {
  ChebCoeffs c;
  c.theta.resize(order + 1);
  for (auto& t : c.theta) t = rng.normal();
  return c;
}

}  // namespace

TEST_CASE("cheb_apply: trivial filters") {
  Rng rng(5);
  const ScaledLaplacian lap = random_operator(rng, 9);
  const Matrix h = testref::random_matrix(rng, 9, 3);

  SUBCASE("theta=(1,0,0) is the identity filter") {
    const ChebResult r = cheb_apply(lap, ChebCoeffs{{1.0, 0.0, 0.0}}, h);
    CHECK(max_abs_diff(r.output, h) == 0.0);
  }
  SUBCASE("theta=(0,1) applies the operator once") {
    const ChebResult r = cheb_apply(lap, ChebCoeffs{{0.0, 1.0}}, h);
    CHECK(max_abs_diff(r.output, spmm(lap.matrix, h)) == 0.0);
  }
  SUBCASE("tape starts with the input signal, exactly") {
    const ChebResult r = cheb_apply(lap, ChebCoeffs{{0.3, -0.7, 0.2}}, h);
    CHECK(max_abs_diff(r.tape.terms[0], h) == 0.0);
    CHECK(r.tape.terms.size() == 3);
  }
  SUBCASE("dimension mismatch") {
    CHECK_THROWS_AS(cheb_apply(lap, ChebCoeffs{{1.0}}, Matrix(4, 2)), std::invalid_argument);
  }
}

TEST_CASE("cheb_apply matches the dense spectral oracle") {
  Rng rng(41);
  const ScaledLaplacian lap = random_operator(rng, 12);
  const ChebCoeffs c = random_coeffs(rng, 4);
  const Matrix h = testref::random_matrix(rng, 12, 5);
  const Matrix fast = cheb_apply(lap, c, h).output;
  const Matrix slow = dense_spectral_oracle(lap.matrix, c, h);
  CHECK(relative_diff(fast, slow) <= 1e-10);
}

TEST_CASE("property: oracle equivalence over random instances") {
  Rng rng(4242);
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = rng.uniform_int(4, 30);
    const ScaledLaplacian lap = random_operator(rng, n);
    const ChebCoeffs c = random_coeffs(rng, rng.uniform_int(0, 6));
    const Matrix h = testref::random_matrix(rng, n, rng.uniform_int(1, 4));
    const Matrix fast = cheb_apply(lap, c, h).output;
    const Matrix slow = dense_spectral_oracle(lap.matrix, c, h);
    CHECK(relative_diff(fast, slow) <= 1e-10);
    CHECK(relative_diff(slow, fast) <= 1e-10);
  }
}

TEST_CASE("property: linearity in the signal and the coefficients") {
  Rng rng(77);
  const ScaledLaplacian lap = random_operator(rng, 14);
  const ChebCoeffs c1 = random_coeffs(rng, 4);
  const ChebCoeffs c2 = random_coeffs(rng, 4);
  const Matrix h1 = testref::random_matrix(rng, 14, 2);
  const Matrix h2 = testref::random_matrix(rng, 14, 2);
  const double alpha = 0.37, beta = -1.21;

  SUBCASE("signal") {
    Matrix mix = h1;
    scale_in_place(mix, alpha);
    axpy(mix, beta, h2);
    const Matrix lhs = cheb_apply(lap, c1, mix).output;
    Matrix rhs = cheb_apply(lap, c1, h1).output;
    scale_in_place(rhs, alpha);
    axpy(rhs, beta, cheb_apply(lap, c1, h2).output);
    CHECK(relative_diff(lhs, rhs) <= 1e-12);
  }
  SUBCASE("coefficients") {
    ChebCoeffs mix;
    mix.theta.resize(5);
    for (std::size_t i = 0; i < 5; ++i) mix.theta[i] = alpha * c1.theta[i] + beta * c2.theta[i];
    const Matrix lhs = cheb_apply(lap, mix, h1).output;
    Matrix rhs = cheb_apply(lap, c1, h1).output;
    scale_in_place(rhs, alpha);
    axpy(rhs, beta, cheb_apply(lap, c2, h1).output);
    CHECK(relative_diff(lhs, rhs) <= 1e-12);
  }
}

TEST_CASE("cheb_backward: exact small cases") {
  Rng rng(9);
  const ScaledLaplacian lap = random_operator(rng, 8);
  const Matrix h = testref::random_matrix(rng, 8, 2);
  const Matrix g = testref::random_matrix(rng, 8, 2);

  SUBCASE("identity filter passes the gradient through") {
    const ChebCoeffs c{{1.0, 0.0}};
    const ChebResult fwd = cheb_apply(lap, c, h);
    const ChebGradients grads = cheb_backward(fwd.tape, lap, c, g);
    CHECK(max_abs_diff(grads.signal, g) == 0.0);
  }
  SUBCASE("order zero reduces to an elementwise product sum") {
    const ChebCoeffs c{{0.8}};
    const ChebResult fwd = cheb_apply(lap, c, h);
    const ChebGradients grads = cheb_backward(fwd.tape, lap, c, g);
    CHECK(grads.theta[0] == doctest::Approx(dot_all(g, h)).epsilon(1e-14));
  }
  SUBCASE("stale tape is rejected") {
    const ChebResult fwd = cheb_apply(lap, ChebCoeffs{{1.0, 0.5}}, h);
    CHECK_THROWS_AS(cheb_backward(fwd.tape, lap, ChebCoeffs{{1.0, 0.5, 0.1}}, g),
                    std::invalid_argument);
  }
}

TEST_CASE("property: gradients match central finite differences") {
  Rng rng(1234);
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = rng.uniform_int(4, 10);
    const std::size_t d = rng.uniform_int(1, 3);
    const ScaledLaplacian lap = random_operator(rng, n);
    ChebCoeffs c = random_coeffs(rng, 3);
    Matrix h = testref::random_matrix(rng, n, d);
    const Matrix g = testref::random_matrix(rng, n, d);

    const ChebResult fwd = cheb_apply(lap, c, h);
    const ChebGradients grads = cheb_backward(fwd.tape, lap, c, g);

    // loss = <G, cheb_apply(h)>
    const auto loss = [&] { return dot_all(g, cheb_apply(lap, c, h).output); };

    const std::vector<double> fd_theta = testref::central_differences(loss, c.theta, 1e-5);
    CHECK(testref::grad_error(fd_theta, grads.theta) <= 1e-5);

    const std::vector<double> fd_h = testref::central_differences(loss, h.data, 1e-5);
    std::vector<double> ana_h(grads.signal.data.begin(), grads.signal.data.end());
    CHECK(testref::grad_error(fd_h, ana_h) <= 1e-5);
  }
}

TEST_CASE("dense_spectral_oracle: scalar sanity cases") {
  SUBCASE("identity filter") {
    Rng rng(3);
    const ScaledLaplacian lap = random_operator(rng, 7);
    const Matrix h = testref::random_matrix(rng, 7, 2);
    CHECK(relative_diff(dense_spectral_oracle(lap.matrix, ChebCoeffs{{1.0, 0.0, 0.0}}, h), h) <=
          1e-12);
  }
  SUBCASE("diagonal operator scales by T_2(lambda)") {
    SparseMatrix diag = SparseMatrix::identity(3);
    diag.values = {-1.0, 0.0, 1.0};
    const Matrix h = Matrix::identity(3);
    const Matrix out = dense_spectral_oracle(diag, ChebCoeffs{{0.0, 0.0, 1.0}}, h);
    // T_2(x) = 2x^2 - 1 at {-1, 0, 1} = {1, -1, 1}
    CHECK(out(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(out(1, 1) == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(out(2, 2) == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("non-symmetric input is rejected") {
    SparseMatrix bad;
    bad.n = 2;
    bad.offsets = {0, 1, 1};
    bad.indices = {1};
    bad.values = {1.0};
    CHECK_THROWS(dense_spectral_oracle(bad, ChebCoeffs{{1.0}}, Matrix(2, 1)));
  }
}

TEST_CASE("property: a filter with only theta_k set is k-local") {
  Rng rng(55);
  for (int t = 0; t < 5; ++t) {
    const std::size_t n = 24;
    const Graph g = testref::random_connected_graph(rng, n, 0.05);
    const ScaledLaplacian lap = scaled_laplacian(normalized_laplacian(g));
    const std::size_t k = 3;
    ChebCoeffs c;
    c.theta.assign(k + 1, 0.0);
    c.theta[k] = 1.3;

    const std::size_t u = rng.uniform_int(0, n - 1);
    const auto dist = testref::bfs_distances(g, u);

    Matrix h = testref::random_matrix(rng, n, 2);
    Matrix h_masked = h;
    bool masked_any = false;
    for (std::size_t v = 0; v < n; ++v)
      if (dist[v] < 0 || dist[v] > static_cast<int>(k)) {
        for (std::size_t cidx = 0; cidx < 2; ++cidx) h_masked(v, cidx) = 0.0;
        masked_any = true;
      }

    const Matrix out_full = cheb_apply(lap, c, h).output;
    const Matrix out_masked = cheb_apply(lap, c, h_masked).output;
    for (std::size_t cidx = 0; cidx < 2; ++cidx)
      CHECK(out_full(u, cidx) == out_masked(u, cidx));
    (void)masked_any;
  }
}
