#include <benchmark/benchmark.h>

#include "chebnet/cheb.hpp"
#include "chebnet/rng.hpp"

using namespace chebnet;

namespace {

Graph random_graph_with_edges(std::size_t m, std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t n = std::max<std::size_t>(m / 5, 8);
  std::vector<EdgeSpec> edges;
  edges.reserve(m + n);
  for (std::size_t v = 1; v < n; ++v) edges.push_back({rng.uniform_int(0, v - 1), v, 1.0});
  while (edges.size() < m + n - 1) {
    const std::size_t u = rng.uniform_int(0, n - 1);
    const std::size_t v = rng.uniform_int(0, n - 1);
    if (u != v) edges.push_back({std::min(u, v), std::max(u, v), 1.0});
  }
  return build_graph(n, edges);
}

Matrix random_signal(std::size_t n, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  Matrix h(n, d);
  for (auto& x : h.data) x = rng.normal();
  return h;
}

}  // namespace

static void BM_spmm(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const auto d = static_cast<std::size_t>(state.range(1));
  const Graph g = random_graph_with_edges(m, 1);
  const SparseMatrix lap = normalized_laplacian(g);
  const Matrix x = random_signal(g.n_nodes, d, 2);
  for (auto _ : state) {
    Matrix y = spmm(lap, x);
    benchmark::DoNotOptimize(y.data.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                          static_cast<std::int64_t>(lap.nnz() * d));
}
BENCHMARK(BM_spmm)->Args({1000, 2})->Args({10000, 2})->Args({100000, 2})->Args({1000000, 2})
    ->Args({100000, 16})->Unit(benchmark::kMicrosecond);

static void BM_cheb_apply(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const auto k = static_cast<std::size_t>(state.range(1));
  const Graph g = random_graph_with_edges(m, 3);
  const ScaledLaplacian lap = scaled_laplacian(normalized_laplacian(g), 2.0);
  const Matrix h = random_signal(g.n_nodes, 2, 4);
  ChebCoeffs coeffs;
  Rng rng(5);
  coeffs.theta.resize(k + 1);
  for (auto& t : coeffs.theta) t = rng.normal();
  for (auto _ : state) {
    ChebResult r = cheb_apply(lap, coeffs, h);
    benchmark::DoNotOptimize(r.output.data.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                          static_cast<std::int64_t>(lap.matrix.nnz() * k * 2));
}
BENCHMARK(BM_cheb_apply)
    ->Args({1000, 4})->Args({10000, 4})->Args({100000, 4})->Args({1000000, 4})
    ->Args({100000, 2})->Args({100000, 6})
    ->Unit(benchmark::kMicrosecond);

static void BM_cheb_backward(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const Graph g = random_graph_with_edges(m, 6);
  const ScaledLaplacian lap = scaled_laplacian(normalized_laplacian(g), 2.0);
  const Matrix h = random_signal(g.n_nodes, 2, 7);
  const Matrix grad = random_signal(g.n_nodes, 2, 8);
  ChebCoeffs coeffs{{0.2, -0.4, 0.3, 0.1, -0.2}};
  const ChebResult fwd = cheb_apply(lap, coeffs, h);
  for (auto _ : state) {
    ChebGradients gr = cheb_backward(fwd.tape, lap, coeffs, grad);
    benchmark::DoNotOptimize(gr.signal.data.data());
  }
}
BENCHMARK(BM_cheb_backward)->Arg(1000)->Arg(10000)->Arg(100000)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
