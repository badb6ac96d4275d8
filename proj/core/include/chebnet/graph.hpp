#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "chebnet/sparse.hpp"

namespace chebnet {

struct EdgeSpec {
  std::size_t u = 0;
  std::size_t v = 0;
  double w = 1.0;
};

enum class FeatureKind { none, categorical, dense };

/// Undirected weighted graph with per-node features and task labels.
/// The adjacency is stored symmetrically with a zero diagonal; instances are
/// immutable by convention once built and safe for concurrent reads.
struct Graph {
  std::size_t n_nodes = 0;
  SparseMatrix adj;
  std::vector<int> codes;       // categorical node features (one code per node)
  Matrix features;              // dense node features (n_nodes x d), rows==0 if unused
  std::vector<int> node_labels;
  std::optional<double> graph_label;
  std::int64_t id = 0;

  FeatureKind feature_kind() const {
    if (!codes.empty()) return FeatureKind::categorical;
    if (features.rows > 0) return FeatureKind::dense;
    return FeatureKind::none;
  }
};

/// Builds the symmetric CSR adjacency from an undirected edge list.
/// Duplicate edges collapse by summing weights. Rejects self-loops,
/// out-of-range endpoints and negative or non-finite weights.
Graph build_graph(std::size_t n, std::span<const EdgeSpec> edges);

/// Full invariant check (structure, symmetry, zero diagonal, feature/label sizes).
void validate_graph(const Graph& g);

/// d[u] = sum of edge weights incident to u.
std::vector<double> degree_vector(const Graph& g);

/// Normalized Laplacian I - D^(-1/2) A D^(-1/2). Degree-0 nodes keep an
/// identity row (their D^(-1/2) entry is taken as 0), so the spectrum stays
/// inside [0, 2].
SparseMatrix normalized_laplacian(const Graph& g);

/// Laplacian rescaled so its spectrum lands in [-1, 1]: (2/lambda_max) L - I.
/// lambda_max is fixed to 2 across the library; the estimator below exists
/// for validation only.
struct ScaledLaplacian {
  SparseMatrix matrix;
  double lambda_max = 2.0;
};

ScaledLaplacian scaled_laplacian(const SparseMatrix& lap, double lambda_max = 2.0);

/// Block-diagonal mini-batch of graphs. offsets has size() + 1 entries and
/// partitions [0, n_nodes) into member node ranges.
struct BatchedGraph {
  Graph merged;
  std::vector<std::size_t> offsets;
  std::size_t size() const { return offsets.empty() ? 0 : offsets.size() - 1; }
};

BatchedGraph batch(std::span<const Graph* const> graphs);
BatchedGraph batch(const std::vector<Graph>& graphs);

/// Power-iteration estimate of the largest eigenvalue of a symmetric PSD
/// matrix. Stops at |change| <= tol * |estimate| or after iters rounds.
double estimate_lambda_max(const SparseMatrix& m, int iters = 200, double tol = 1e-10,
                           std::uint64_t seed = 0x17E55EEDull);

}  // namespace chebnet
