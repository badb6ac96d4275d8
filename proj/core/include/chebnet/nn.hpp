#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "chebnet/cheb.hpp"
#include "chebnet/graph.hpp"

namespace chebnet {

enum class TaskKind { node_classification, graph_regression, graph_binary };

std::string to_string(TaskKind t);
TaskKind task_from_string(std::string_view s);

enum class LayerToken { embedding, cheb_conv, gcn_conv, mean_pool, linear };

struct LayerDesc {
  LayerToken token;
  std::size_t dim = 0;
};

/// Declarative architecture parsed from a compact string such as
/// "7 -E70 -ChN70 -ChN70 -ChN70 -ChN70 -MP70 -L35 -L17 -L6".
///
/// Vocabulary: leading integer = input vocabulary (or dense input width),
/// E/AE = embedding, ChN = Chebyshev conv block, GCN = GCN conv block,
/// MP = mean pooling, L = linear, No-RC = disable residual connections.
/// `k` is the number of Chebyshev basis terms per ChN layer (a ChN layer of
/// k terms owns k weight matrices, i.e. polynomial order k-1).
struct ModelSpec {
  std::string arch;
  std::size_t input_vocab = 0;
  bool dense_input = false;
  std::vector<LayerDesc> layers;
  TaskKind task = TaskKind::node_classification;
  bool residual = true;
  std::size_t k = 1;

  std::size_t output_dim() const;
};

ModelSpec parse_model_spec(std::string_view arch, TaskKind task, std::size_t k);

// ---- parameter layout (offsets into the flat parameter/buffer vectors) ----

struct EmbeddingLayer {
  std::size_t vocab = 0, dim = 0;
  std::size_t table_off = 0;
};

struct BatchNormLayer {
  std::size_t dim = 0;
  std::size_t gamma_off = 0, beta_off = 0;
  std::size_t mean_off = 0, var_off = 0;  // running stats, in buffers
};

struct ChebConvLayer {
  std::size_t order = 0;  // polynomial order; order+1 weight matrices
  std::size_t in_dim = 0, out_dim = 0;
  std::size_t theta_off = 0, bias_off = 0;
};

struct GcnConvLayer {
  std::size_t in_dim = 0, out_dim = 0;
  std::size_t weight_off = 0, bias_off = 0;
};

struct LinearLayer {
  std::size_t in_dim = 0, out_dim = 0;
  std::size_t weight_off = 0, bias_off = 0;
  bool relu_after = false;
};

struct ConvBlock {
  std::variant<ChebConvLayer, GcnConvLayer> conv;
  BatchNormLayer bn;
  bool residual = false;
};

/// Instantiated model. All learnable scalars live in one flat `params`
/// vector; layers hold offsets into it, so the flat view and the per-layer
/// views alias the same storage. `buffers` holds batch-norm running stats.
struct Model {
  ModelSpec spec;
  std::uint64_t init_seed = 0;
  std::vector<double> params;
  std::vector<double> grads;
  std::vector<double> buffers;

  std::optional<EmbeddingLayer> embedding;
  std::vector<ConvBlock> blocks;
  bool pool = false;  // mean-pool before the head (graph tasks)
  std::vector<LinearLayer> head;

  std::span<double> param(std::size_t off, std::size_t len) {
    return {params.data() + off, len};
  }
  std::span<const double> param(std::size_t off, std::size_t len) const {
    return {params.data() + off, len};
  }
  std::span<double> grad(std::size_t off, std::size_t len) {
    return {grads.data() + off, len};
  }
  std::span<double> buffer(std::size_t off, std::size_t len) {
    return {buffers.data() + off, len};
  }
};

/// Glorot-uniform weights, zero biases, unit batch-norm scale; deterministic
/// for a fixed seed.
Model build_model(const ModelSpec& spec, std::uint64_t seed);

std::size_t param_count(const ModelSpec& spec);
std::size_t param_count(const Model& m);

// ---- forward/backward ----

struct BatchNormCache {
  std::vector<double> invstd;
  Matrix xhat;
};

struct ConvBlockCache {
  Matrix input;
  std::vector<Matrix> tape;  // ChN: T_i(S) X
  Matrix px;                 // GCN: P X
  BatchNormCache bn;
  std::vector<std::uint8_t> relu_mask;
};

struct ForwardCtx {
  bool training = false;
  std::vector<std::size_t> offsets;
  ScaledLaplacian lap;
  SparseMatrix prop;
  std::vector<int> codes;
  Matrix input;
  std::vector<ConvBlockCache> blocks;
  Matrix pool_input;
  std::vector<Matrix> head_inputs;
  std::vector<std::vector<std::uint8_t>> head_relu;
};

/// Node tasks emit one row of logits per node; graph tasks mean-pool and emit
/// one row per member graph. Pass a ctx to enable a later backward call.
Matrix model_forward(Model& m, const BatchedGraph& bg, bool training, ForwardCtx* ctx = nullptr);

/// Accumulates parameter gradients (aligned with the flat view) into m.grads.
void model_backward(Model& m, const ForwardCtx& ctx, const Matrix& grad_out);

void zero_grad(Model& m);

// ---- individual layer operations (model internals, exposed for testing) ----

Matrix embedding_forward(std::span<const double> table, std::size_t vocab, std::size_t dim,
                         std::span<const int> codes);
void embedding_backward(const Matrix& grad_out, std::span<const int> codes,
                        std::span<double> grad_table);

/// Y = sum_i T_i(S) X Theta_i + bias; one recursion shared by all channels.
/// theta layout: [term][in][out], each term's matrix row-major contiguous.
Matrix cheb_conv_forward(std::span<const double> theta, std::span<const double> bias,
                         std::size_t order, std::size_t in_dim, std::size_t out_dim,
                         const ScaledLaplacian& lap, const Matrix& x,
                         std::vector<Matrix>* tape);
void cheb_conv_backward(std::span<const double> theta, std::size_t order, std::size_t in_dim,
                        std::size_t out_dim, const ScaledLaplacian& lap,
                        const std::vector<Matrix>& tape, const Matrix& grad_out,
                        std::span<double> grad_theta, std::span<double> grad_bias,
                        Matrix* grad_x);

/// Self-loop renormalized propagation operator D~^(-1/2) (A + I) D~^(-1/2).
SparseMatrix gcn_propagation(const SparseMatrix& adj);
Matrix gcn_forward(std::span<const double> weight, std::span<const double> bias,
                   std::size_t in_dim, std::size_t out_dim, const SparseMatrix& prop,
                   const Matrix& x, Matrix* px_cache);
void gcn_backward(std::span<const double> weight, std::size_t in_dim, std::size_t out_dim,
                  const SparseMatrix& prop, const Matrix& px, const Matrix& grad_out,
                  std::span<double> grad_weight, std::span<double> grad_bias, Matrix* grad_x);

Matrix linear_forward(std::span<const double> weight, std::span<const double> bias,
                      std::size_t in_dim, std::size_t out_dim, const Matrix& x);
void linear_backward(std::span<const double> weight, std::size_t in_dim, std::size_t out_dim,
                     const Matrix& x, const Matrix& grad_out, std::span<double> grad_weight,
                     std::span<double> grad_bias, Matrix* grad_x);

/// Per-feature normalization over the batch dimension (all nodes in the
/// batch). Training mode uses batch statistics (biased variance) and updates
/// running stats in place; eval mode reads the running stats. Requires at
/// least 2 rows in training mode.
Matrix batchnorm_forward(std::span<const double> gamma, std::span<const double> beta,
                         std::span<double> run_mean, std::span<double> run_var, const Matrix& x,
                         bool training, BatchNormCache* cache, double eps = 1e-5,
                         double momentum = 0.1);
void batchnorm_backward(std::span<const double> gamma, const BatchNormCache& cache,
                        const Matrix& grad_out, std::span<double> grad_gamma,
                        std::span<double> grad_beta, Matrix& grad_x);

Matrix relu_forward(const Matrix& x, std::vector<std::uint8_t>* mask);
Matrix relu_backward(const Matrix& grad_out, const std::vector<std::uint8_t>& mask);

/// Row g of the result is the mean of x over that graph's node range.
Matrix mean_pool(const Matrix& x, std::span<const std::size_t> offsets);
Matrix mean_pool_backward(const Matrix& grad_out, std::span<const std::size_t> offsets,
                          std::size_t n_nodes);

}  // namespace chebnet
