#include "chebnet/graph.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "chebnet/rng.hpp"

namespace chebnet {

Graph build_graph(std::size_t n, std::span<const EdgeSpec> edges) {
  Graph g;
  g.n_nodes = n;

  std::vector<std::pair<std::size_t, std::size_t>> halves;
  std::vector<double> weights;
  halves.reserve(edges.size() * 2);
  weights.reserve(edges.size() * 2);
  for (const EdgeSpec& e : edges) {
    if (e.u >= n || e.v >= n)
      throw std::invalid_argument("build_graph: endpoint out of range (" + std::to_string(e.u) +
                                  "," + std::to_string(e.v) + ") with n=" + std::to_string(n));
    if (e.u == e.v)
      throw std::invalid_argument("build_graph: self-loop at node " + std::to_string(e.u));
    if (!std::isfinite(e.w) || e.w < 0.0)
      throw std::invalid_argument("build_graph: weight must be finite and >= 0");
    halves.emplace_back(e.u, e.v);
    weights.push_back(e.w);
    halves.emplace_back(e.v, e.u);
    weights.push_back(e.w);
  }

  std::vector<std::size_t> order(halves.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return halves[a] < halves[b];
  });

  SparseMatrix& adj = g.adj;
  adj.n = n;
  adj.offsets.assign(n + 1, 0);
  adj.indices.reserve(halves.size());
  adj.values.reserve(halves.size());

  std::size_t i = 0;
  while (i < order.size()) {
    const auto key = halves[order[i]];
    double w = 0.0;
    while (i < order.size() && halves[order[i]] == key) {
      w += weights[order[i]];  // duplicates collapse by summing
      ++i;
    }
    adj.indices.push_back(key.second);
    adj.values.push_back(w);
    adj.offsets[key.first + 1] += 1;
  }
  for (std::size_t r = 0; r < n; ++r) adj.offsets[r + 1] += adj.offsets[r];
  return g;
}

void validate_graph(const Graph& g) {
  if (g.adj.n != g.n_nodes) throw std::invalid_argument("graph: adjacency dimension != n_nodes");
  validate_csr(g.adj);
  for (std::size_t r = 0; r < g.adj.n; ++r)
    for (std::size_t k = g.adj.offsets[r]; k < g.adj.offsets[r + 1]; ++k) {
      if (g.adj.indices[k] == r) throw std::invalid_argument("graph: self-loop present");
      if (!std::isfinite(g.adj.values[k]) || g.adj.values[k] < 0.0)
        throw std::invalid_argument("graph: weight must be finite and >= 0");
    }
  if (!is_symmetric(g.adj)) throw std::invalid_argument("graph: adjacency not symmetric");
  if (!g.codes.empty() && g.codes.size() != g.n_nodes)
    throw std::invalid_argument("graph: codes length != n_nodes");
  if (g.features.rows > 0 && g.features.rows != g.n_nodes)
    throw std::invalid_argument("graph: feature rows != n_nodes");
  if (!g.codes.empty() && g.features.rows > 0)
    throw std::invalid_argument("graph: both categorical and dense features set");
  if (!g.node_labels.empty() && g.node_labels.size() != g.n_nodes)
    throw std::invalid_argument("graph: node_labels length != n_nodes");
}

std::vector<double> degree_vector(const Graph& g) {
  std::vector<double> d(g.n_nodes, 0.0);
  for (std::size_t r = 0; r < g.adj.n; ++r)
    for (std::size_t k = g.adj.offsets[r]; k < g.adj.offsets[r + 1]; ++k)
      d[r] += g.adj.values[k];
  return d;
}

SparseMatrix normalized_laplacian(const Graph& g) {
  const std::vector<double> deg = degree_vector(g);
  std::vector<double> dinv_sqrt(g.n_nodes, 0.0);
  for (std::size_t u = 0; u < g.n_nodes; ++u)
    if (deg[u] > 0.0) dinv_sqrt[u] = 1.0 / std::sqrt(deg[u]);

  const SparseMatrix& a = g.adj;
  SparseMatrix lap;
  lap.n = g.n_nodes;
  lap.offsets.reserve(g.n_nodes + 1);
  lap.offsets.push_back(0);
  lap.indices.reserve(a.nnz() + g.n_nodes);
  lap.values.reserve(a.nnz() + g.n_nodes);
  for (std::size_t r = 0; r < g.n_nodes; ++r) {
    bool diag_done = false;
    for (std::size_t k = a.offsets[r]; k < a.offsets[r + 1]; ++k) {
      const std::size_t c = a.indices[k];
      if (!diag_done && c > r) {
        lap.indices.push_back(r);
        lap.values.push_back(1.0);
        diag_done = true;
      }
      lap.indices.push_back(c);
      // grouped so (r,c) and (c,r) round identically
      lap.values.push_back(-a.values[k] * (dinv_sqrt[r] * dinv_sqrt[c]));
    }
    if (!diag_done) {
      lap.indices.push_back(r);
      lap.values.push_back(1.0);
    }
    lap.offsets.push_back(lap.indices.size());
  }
  return lap;
}

ScaledLaplacian scaled_laplacian(const SparseMatrix& lap, double lambda_max) {
  if (!(lambda_max > 0.0))
    throw std::invalid_argument("scaled_laplacian: lambda_max must be positive");
  ScaledLaplacian s;
  s.lambda_max = lambda_max;
  s.matrix = csr_scale(lap, 2.0 / lambda_max);
  // subtract the identity along the diagonal, inserting entries where missing
  SparseMatrix neg_id = SparseMatrix::identity(lap.n);
  for (auto& v : neg_id.values) v = -1.0;
  s.matrix = csr_add(s.matrix, neg_id);
  return s;
}

BatchedGraph batch(std::span<const Graph* const> graphs) {
  if (graphs.empty()) throw std::invalid_argument("batch: empty graph list");
  const FeatureKind kind = graphs.front()->feature_kind();
  for (const Graph* g : graphs)
    if (g->feature_kind() != kind)
      throw std::invalid_argument("batch: mixed feature kinds");

  BatchedGraph b;
  b.offsets.reserve(graphs.size() + 1);
  b.offsets.push_back(0);
  std::vector<const SparseMatrix*> blocks;
  blocks.reserve(graphs.size());
  std::size_t total = 0;
  for (const Graph* g : graphs) {
    total += g->n_nodes;
    b.offsets.push_back(total);
    blocks.push_back(&g->adj);
  }
  b.merged.n_nodes = total;
  b.merged.adj = block_diag(std::span<const SparseMatrix* const>(blocks));

  if (kind == FeatureKind::categorical) {
    b.merged.codes.reserve(total);
    for (const Graph* g : graphs)
      b.merged.codes.insert(b.merged.codes.end(), g->codes.begin(), g->codes.end());
  } else if (kind == FeatureKind::dense) {
    const std::size_t d = graphs.front()->features.cols;
    b.merged.features = Matrix(total, d);
    std::size_t row = 0;
    for (const Graph* g : graphs) {
      if (g->features.cols != d) throw std::invalid_argument("batch: dense feature widths differ");
      std::copy(g->features.data.begin(), g->features.data.end(),
                b.merged.features.data.begin() + static_cast<std::ptrdiff_t>(row * d));
      row += g->n_nodes;
    }
  }

  bool any_node_labels = false;
  for (const Graph* g : graphs) any_node_labels |= !g->node_labels.empty();
  if (any_node_labels) {
    b.merged.node_labels.reserve(total);
    for (const Graph* g : graphs) {
      if (g->node_labels.size() != g->n_nodes)
        throw std::invalid_argument("batch: node labels missing on some member graphs");
      b.merged.node_labels.insert(b.merged.node_labels.end(), g->node_labels.begin(),
                                  g->node_labels.end());
    }
  }
  return b;
}

BatchedGraph batch(const std::vector<Graph>& graphs) {
  std::vector<const Graph*> ptrs;
  ptrs.reserve(graphs.size());
  for (const auto& g : graphs) ptrs.push_back(&g);
  return batch(std::span<const Graph* const>(ptrs));
}

double estimate_lambda_max(const SparseMatrix& m, int iters, double tol, std::uint64_t seed) {
  if (m.n == 0) return 0.0;
  Rng rng(seed);
  std::vector<double> v = rng.normal_vector(m.n);
  std::vector<double> w(m.n);
  double norm = 0.0;
  for (const double x : v) norm += x * x;
  norm = std::sqrt(norm);
  if (norm == 0.0) return 0.0;
  for (auto& x : v) x /= norm;

  double lambda = 0.0;
  for (int it = 0; it < iters; ++it) {
    spmv(m, v, w);
    double rayleigh = 0.0, wn = 0.0;
    for (std::size_t i = 0; i < m.n; ++i) {
      rayleigh += v[i] * w[i];
      wn += w[i] * w[i];
    }
    wn = std::sqrt(wn);
    if (wn == 0.0) return 0.0;  // v landed in the kernel
    const bool settled = it > 0 && std::abs(rayleigh - lambda) <= tol * std::abs(rayleigh);
    lambda = rayleigh;
    if (settled) break;
    for (std::size_t i = 0; i < m.n; ++i) v[i] = w[i] / wn;
  }
  return lambda;
}

}  // namespace chebnet
