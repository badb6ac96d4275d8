#include "chebnet/nn.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "chebnet/rng.hpp"

namespace chebnet {

std::string to_string(TaskKind t) {
  switch (t) {
    case TaskKind::node_classification: return "node_classification";
    case TaskKind::graph_regression: return "graph_regression";
    case TaskKind::graph_binary: return "graph_binary";
  }
  return "unknown";
}

TaskKind task_from_string(std::string_view s) {
  if (s == "node_classification") return TaskKind::node_classification;
  if (s == "graph_regression") return TaskKind::graph_regression;
  if (s == "graph_binary") return TaskKind::graph_binary;
  throw std::invalid_argument("unknown task kind: " + std::string(s));
}

std::size_t ModelSpec::output_dim() const {
  if (layers.empty()) return dense_input ? input_vocab : 0;
  return layers.back().dim;
}

namespace {

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; });
}

std::size_t parse_dim(std::string_view tok, std::string_view tail) {
  if (!all_digits(tail))
    throw std::invalid_argument("unknown layer token: '" + std::string(tok) + "'");
  return static_cast<std::size_t>(std::stoull(std::string(tail)));
}

}  // namespace

ModelSpec parse_model_spec(std::string_view arch, TaskKind task, std::size_t k) {
  ModelSpec spec;
  spec.task = task;
  spec.k = k;

  std::vector<std::string> tokens;
  {
    std::istringstream iss{std::string(arch)};
    std::string raw;
    while (iss >> raw) {
      std::string t;
      for (const char c : raw)
        if (c != '(' && c != ')') t.push_back(c);
      while (!t.empty() && t.front() == '-' && t != "-") t.erase(t.begin());
      if (!t.empty()) tokens.push_back(std::move(t));
    }
  }
  if (tokens.empty()) throw std::invalid_argument("empty architecture string");

  std::size_t pos = 0;
  if (all_digits(tokens[0])) {
    spec.input_vocab = static_cast<std::size_t>(std::stoull(tokens[0]));
    pos = 1;
  }

  for (; pos < tokens.size(); ++pos) {
    const std::string& t = tokens[pos];
    if (t == "No-RC" || t == "NoRC") {
      spec.residual = false;
    } else if (t.rfind("ChN", 0) == 0) {
      spec.layers.push_back({LayerToken::cheb_conv, parse_dim(t, t.substr(3))});
    } else if (t.rfind("GCN", 0) == 0) {
      spec.layers.push_back({LayerToken::gcn_conv, parse_dim(t, t.substr(3))});
    } else if (t.rfind("AE", 0) == 0) {
      spec.layers.push_back({LayerToken::embedding, parse_dim(t, t.substr(2))});
    } else if (t.rfind("MP", 0) == 0) {
      spec.layers.push_back({LayerToken::mean_pool, parse_dim(t, t.substr(2))});
    } else if (t.rfind("E", 0) == 0) {
      spec.layers.push_back({LayerToken::embedding, parse_dim(t, t.substr(1))});
    } else if (t.rfind("L", 0) == 0) {
      spec.layers.push_back({LayerToken::linear, parse_dim(t, t.substr(1))});
    } else {
      throw std::invalid_argument("unknown layer token: '" + t + "'");
    }
  }
  if (spec.layers.empty()) throw std::invalid_argument("architecture has no layers");

  // grammar: E? (ChN|GCN)* MP? L*
  enum Stage { start, convs, pooled, linears };
  Stage stage = start;
  bool has_pool = false, has_conv = false;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerToken tok = spec.layers[i].token;
    switch (tok) {
      case LayerToken::embedding:
        if (i != 0) throw std::invalid_argument("embedding must be the first layer");
        break;
      case LayerToken::cheb_conv:
      case LayerToken::gcn_conv:
        if (stage > convs) throw std::invalid_argument("conv layer after pooling/linear stage");
        stage = convs;
        has_conv = true;
        break;
      case LayerToken::mean_pool:
        if (has_pool) throw std::invalid_argument("duplicate mean-pool layer");
        if (stage == linears) throw std::invalid_argument("mean-pool after linear stage");
        stage = pooled;
        has_pool = true;
        break;
      case LayerToken::linear:
        stage = linears;
        break;
    }
  }

  const bool starts_with_embedding =
      spec.layers.front().token == LayerToken::embedding;
  spec.dense_input = !starts_with_embedding;
  if (spec.input_vocab == 0)
    throw std::invalid_argument(starts_with_embedding
                                    ? "embedding requires a leading vocabulary size"
                                    : "dense input requires a leading input width");

  // dimension chaining
  std::size_t current = spec.dense_input ? spec.input_vocab : 0;
  for (const LayerDesc& l : spec.layers) {
    switch (l.token) {
      case LayerToken::embedding:
        current = l.dim;
        break;
      case LayerToken::cheb_conv:
      case LayerToken::gcn_conv:
      case LayerToken::linear:
        if (current == 0) throw std::invalid_argument("layer has no input dimension");
        current = l.dim;
        break;
      case LayerToken::mean_pool:
        if (l.dim != current)
          throw std::invalid_argument("mean-pool width " + std::to_string(l.dim) +
                                      " breaks the dimension chain (expected " +
                                      std::to_string(current) + ")");
        break;
    }
  }

  const bool graph_task = task != TaskKind::node_classification;
  if (graph_task && has_conv && !has_pool)
    throw std::invalid_argument("graph-level task requires a mean-pool layer");

  bool any_cheb = std::any_of(spec.layers.begin(), spec.layers.end(), [](const LayerDesc& l) {
    return l.token == LayerToken::cheb_conv;
  });
  if (any_cheb && spec.k < 1)
    throw std::invalid_argument("ChN layers require k >= 1 basis terms");

  // canonical form
  std::ostringstream canon;
  canon << spec.input_vocab;
  for (const LayerDesc& l : spec.layers) {
    canon << " -";
    switch (l.token) {
      case LayerToken::embedding: canon << "E"; break;
      case LayerToken::cheb_conv: canon << "ChN"; break;
      case LayerToken::gcn_conv: canon << "GCN"; break;
      case LayerToken::mean_pool: canon << "MP"; break;
      case LayerToken::linear: canon << "L"; break;
    }
    canon << l.dim;
  }
  if (!spec.residual) canon << " (No-RC)";
  spec.arch = canon.str();
  return spec;
}

namespace {

struct Layout {
  std::optional<EmbeddingLayer> embedding;
  std::vector<ConvBlock> blocks;
  bool pool = false;
  std::vector<LinearLayer> head;
  std::size_t n_params = 0;
  std::size_t n_buffers = 0;
};

Layout plan_layout(const ModelSpec& spec) {
  Layout lay;
  std::size_t off = 0, buf = 0;
  std::size_t current = spec.dense_input ? spec.input_vocab : 0;

  std::vector<std::size_t> linear_ids;
  for (const LayerDesc& l : spec.layers) {
    switch (l.token) {
      case LayerToken::embedding: {
        EmbeddingLayer e;
        e.vocab = spec.input_vocab;
        e.dim = l.dim;
        e.table_off = off;
        off += e.vocab * e.dim;
        lay.embedding = e;
        current = l.dim;
        break;
      }
      case LayerToken::cheb_conv: {
        ChebConvLayer c;
        c.order = spec.k - 1;
        c.in_dim = current;
        c.out_dim = l.dim;
        c.theta_off = off;
        off += (c.order + 1) * c.in_dim * c.out_dim;
        c.bias_off = off;
        off += c.out_dim;
        ConvBlock b;
        b.conv = c;
        b.bn.dim = l.dim;
        b.bn.gamma_off = off;
        off += l.dim;
        b.bn.beta_off = off;
        off += l.dim;
        b.bn.mean_off = buf;
        buf += l.dim;
        b.bn.var_off = buf;
        buf += l.dim;
        b.residual = spec.residual && current == l.dim;
        lay.blocks.push_back(b);
        current = l.dim;
        break;
      }
      case LayerToken::gcn_conv: {
        GcnConvLayer g;
        g.in_dim = current;
        g.out_dim = l.dim;
        g.weight_off = off;
        off += g.in_dim * g.out_dim;
        g.bias_off = off;
        off += g.out_dim;
        ConvBlock b;
        b.conv = g;
        b.bn.dim = l.dim;
        b.bn.gamma_off = off;
        off += l.dim;
        b.bn.beta_off = off;
        off += l.dim;
        b.bn.mean_off = buf;
        buf += l.dim;
        b.bn.var_off = buf;
        buf += l.dim;
        b.residual = spec.residual && current == l.dim;
        lay.blocks.push_back(b);
        current = l.dim;
        break;
      }
      case LayerToken::mean_pool:
        lay.pool = spec.task != TaskKind::node_classification;
        break;
      case LayerToken::linear: {
        LinearLayer lin;
        lin.in_dim = current;
        lin.out_dim = l.dim;
        lin.weight_off = off;
        off += lin.in_dim * lin.out_dim;
        lin.bias_off = off;
        off += lin.out_dim;
        lin.relu_after = true;  // fixed up below for the final layer
        lay.head.push_back(lin);
        current = l.dim;
        break;
      }
    }
  }
  if (!lay.head.empty()) lay.head.back().relu_after = false;
  lay.n_params = off;
  lay.n_buffers = buf;
  return lay;
}

}  // namespace

std::size_t param_count(const ModelSpec& spec) { return plan_layout(spec).n_params; }
std::size_t param_count(const Model& m) { return m.params.size(); }

Model build_model(const ModelSpec& spec, std::uint64_t seed) {
  Layout lay = plan_layout(spec);
  Model m;
  m.spec = spec;
  m.init_seed = seed;
  m.embedding = lay.embedding;
  m.blocks = std::move(lay.blocks);
  m.pool = lay.pool;
  m.head = std::move(lay.head);
  m.params.assign(lay.n_params, 0.0);
  m.grads.assign(lay.n_params, 0.0);
  m.buffers.assign(lay.n_buffers, 0.0);

  Rng rng(seed);
  auto glorot = [&](std::size_t off, std::size_t count, std::size_t fan_in, std::size_t fan_out) {
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (std::size_t i = 0; i < count; ++i) m.params[off + i] = rng.uniform(-a, a);
  };

  if (m.embedding)
    glorot(m.embedding->table_off, m.embedding->vocab * m.embedding->dim, m.embedding->vocab,
           m.embedding->dim);
  for (ConvBlock& b : m.blocks) {
    if (auto* c = std::get_if<ChebConvLayer>(&b.conv)) {
      glorot(c->theta_off, (c->order + 1) * c->in_dim * c->out_dim, (c->order + 1) * c->in_dim,
             c->out_dim);
    } else {
      auto& g = std::get<GcnConvLayer>(b.conv);
      glorot(g.weight_off, g.in_dim * g.out_dim, g.in_dim, g.out_dim);
    }
    std::fill_n(m.params.begin() + static_cast<std::ptrdiff_t>(b.bn.gamma_off), b.bn.dim, 1.0);
    // beta stays zero; running mean 0, running var 1
    std::fill_n(m.buffers.begin() + static_cast<std::ptrdiff_t>(b.bn.var_off), b.bn.dim, 1.0);
  }
  for (LinearLayer& l : m.head)
    glorot(l.weight_off, l.in_dim * l.out_dim, l.in_dim, l.out_dim);

  return m;
}

// ---------------------------------------------------------------------------
// layer operations
// ---------------------------------------------------------------------------

Matrix embedding_forward(std::span<const double> table, std::size_t vocab, std::size_t dim,
                         std::span<const int> codes) {
  Matrix out(codes.size(), dim);
  for (std::size_t r = 0; r < codes.size(); ++r) {
    const int c = codes[r];
    if (c < 0 || static_cast<std::size_t>(c) >= vocab)
      throw std::invalid_argument("embedding: code " + std::to_string(c) +
                                  " outside vocabulary of size " + std::to_string(vocab));
    const double* row = table.data() + static_cast<std::size_t>(c) * dim;
    std::copy(row, row + dim, out.data.begin() + static_cast<std::ptrdiff_t>(r * dim));
  }
  return out;
}

void embedding_backward(const Matrix& grad_out, std::span<const int> codes,
                        std::span<double> grad_table) {
  const std::size_t dim = grad_out.cols;
  for (std::size_t r = 0; r < grad_out.rows; ++r) {
    double* dst = grad_table.data() + static_cast<std::size_t>(codes[r]) * dim;
    const double* src = grad_out.data.data() + r * dim;
    for (std::size_t j = 0; j < dim; ++j) dst[j] += src[j];
  }
}

Matrix cheb_conv_forward(std::span<const double> theta, std::span<const double> bias,
                         std::size_t order, std::size_t in_dim, std::size_t out_dim,
                         const ScaledLaplacian& lap, const Matrix& x,
                         std::vector<Matrix>* tape) {
  if (x.cols != in_dim) throw std::invalid_argument("cheb_conv: input width mismatch");
  if (lap.matrix.n != x.rows) throw std::invalid_argument("cheb_conv: operator size mismatch");

  std::vector<Matrix> local;
  std::vector<Matrix>& terms = tape ? *tape : local;
  terms.clear();
  terms.reserve(order + 1);
  terms.push_back(x);
  if (order >= 1) terms.push_back(spmm(lap.matrix, x));
  for (std::size_t i = 2; i <= order; ++i) {
    Matrix t = spmm(lap.matrix, terms[i - 1]);
    scale_in_place(t, 2.0);
    sub_in_place(t, terms[i - 2]);
    terms.push_back(std::move(t));
  }

  const std::size_t n = x.rows;
  Matrix y(n, out_dim);
  for (std::size_t r = 0; r < n; ++r)
    std::copy(bias.begin(), bias.end(), y.data.begin() + static_cast<std::ptrdiff_t>(r * out_dim));

  for (std::size_t i = 0; i <= order; ++i) {
    const Matrix& t = terms[i];
    const double* th = theta.data() + i * in_dim * out_dim;
    for (std::size_t r = 0; r < n; ++r) {
      double* yr = y.data.data() + r * out_dim;
      const double* tr = t.data.data() + r * in_dim;
      for (std::size_t a = 0; a < in_dim; ++a) {
        const double v = tr[a];
        const double* w = th + a * out_dim;
        for (std::size_t c = 0; c < out_dim; ++c) yr[c] += v * w[c];
      }
    }
  }
  return y;
}

void cheb_conv_backward(std::span<const double> theta, std::size_t order, std::size_t in_dim,
                        std::size_t out_dim, const ScaledLaplacian& lap,
                        const std::vector<Matrix>& tape, const Matrix& grad_out,
                        std::span<double> grad_theta, std::span<double> grad_bias,
                        Matrix* grad_x) {
  if (tape.size() != order + 1) throw std::invalid_argument("cheb_conv backward: stale tape");
  const std::size_t n = grad_out.rows;

  for (std::size_t r = 0; r < n; ++r) {
    const double* gr = grad_out.data.data() + r * out_dim;
    for (std::size_t c = 0; c < out_dim; ++c) grad_bias[c] += gr[c];
  }

  for (std::size_t i = 0; i <= order; ++i) {
    const Matrix& t = tape[i];
    double* gth = grad_theta.data() + i * in_dim * out_dim;
    for (std::size_t r = 0; r < n; ++r) {
      const double* tr = t.data.data() + r * in_dim;
      const double* gr = grad_out.data.data() + r * out_dim;
      for (std::size_t a = 0; a < in_dim; ++a) {
        const double v = tr[a];
        double* dst = gth + a * out_dim;
        for (std::size_t c = 0; c < out_dim; ++c) dst[c] += v * gr[c];
      }
    }
  }

  if (!grad_x) return;

  // seed the adjoint recursion with Z_i = grad_out * Theta_i^T
  std::vector<Matrix> tbar(order + 1);
  for (std::size_t i = 0; i <= order; ++i) {
    Matrix z(n, in_dim);
    const double* th = theta.data() + i * in_dim * out_dim;
    for (std::size_t r = 0; r < n; ++r) {
      const double* gr = grad_out.data.data() + r * out_dim;
      double* zr = z.data.data() + r * in_dim;
      for (std::size_t a = 0; a < in_dim; ++a) {
        const double* w = th + a * out_dim;
        double s = 0.0;
        for (std::size_t c = 0; c < out_dim; ++c) s += gr[c] * w[c];
        zr[a] = s;
      }
    }
    tbar[i] = std::move(z);
  }
  for (std::size_t i = order; i >= 2; --i) {
    Matrix prop = spmm(lap.matrix, tbar[i]);
    axpy(tbar[i - 1], 2.0, prop);
    axpy(tbar[i - 2], -1.0, tbar[i]);
  }
  if (order >= 1) {
    Matrix prop = spmm(lap.matrix, tbar[1]);
    add_in_place(tbar[0], prop);
  }
  *grad_x = std::move(tbar[0]);
}

SparseMatrix gcn_propagation(const SparseMatrix& adj) {
  const std::size_t n = adj.n;
  std::vector<double> dinv_sqrt(n);
  for (std::size_t r = 0; r < n; ++r) {
    double d = 1.0;  // self-loop
    for (std::size_t k = adj.offsets[r]; k < adj.offsets[r + 1]; ++k) d += adj.values[k];
    dinv_sqrt[r] = 1.0 / std::sqrt(d);
  }
  SparseMatrix p;
  p.n = n;
  p.offsets.reserve(n + 1);
  p.offsets.push_back(0);
  p.indices.reserve(adj.nnz() + n);
  p.values.reserve(adj.nnz() + n);
  for (std::size_t r = 0; r < n; ++r) {
    bool diag_done = false;
    for (std::size_t k = adj.offsets[r]; k < adj.offsets[r + 1]; ++k) {
      const std::size_t c = adj.indices[k];
      if (!diag_done && c > r) {
        p.indices.push_back(r);
        p.values.push_back(dinv_sqrt[r] * dinv_sqrt[r]);
        diag_done = true;
      }
      p.indices.push_back(c);
      p.values.push_back(adj.values[k] * (dinv_sqrt[r] * dinv_sqrt[c]));
    }
    if (!diag_done) {
      p.indices.push_back(r);
      p.values.push_back(dinv_sqrt[r] * dinv_sqrt[r]);
    }
    p.offsets.push_back(p.indices.size());
  }
  return p;
}

Matrix gcn_forward(std::span<const double> weight, std::span<const double> bias,
                   std::size_t in_dim, std::size_t out_dim, const SparseMatrix& prop,
                   const Matrix& x, Matrix* px_cache) {
  if (x.cols != in_dim) throw std::invalid_argument("gcn: input width mismatch");
  if (prop.n != x.rows) throw std::invalid_argument("gcn: operator size mismatch");
  Matrix px = spmm(prop, x);
  Matrix y(x.rows, out_dim);
  for (std::size_t r = 0; r < x.rows; ++r) {
    double* yr = y.data.data() + r * out_dim;
    std::copy(bias.begin(), bias.end(), yr);
    const double* pr = px.data.data() + r * in_dim;
    for (std::size_t a = 0; a < in_dim; ++a) {
      const double v = pr[a];
      const double* w = weight.data() + a * out_dim;
      for (std::size_t c = 0; c < out_dim; ++c) yr[c] += v * w[c];
    }
  }
  if (px_cache) *px_cache = std::move(px);
  return y;
}

void gcn_backward(std::span<const double> weight, std::size_t in_dim, std::size_t out_dim,
                  const SparseMatrix& prop, const Matrix& px, const Matrix& grad_out,
                  std::span<double> grad_weight, std::span<double> grad_bias, Matrix* grad_x) {
  const std::size_t n = grad_out.rows;
  for (std::size_t r = 0; r < n; ++r) {
    const double* gr = grad_out.data.data() + r * out_dim;
    for (std::size_t c = 0; c < out_dim; ++c) grad_bias[c] += gr[c];
    const double* pr = px.data.data() + r * in_dim;
    for (std::size_t a = 0; a < in_dim; ++a) {
      const double v = pr[a];
      double* dst = grad_weight.data() + a * out_dim;
      for (std::size_t c = 0; c < out_dim; ++c) dst[c] += v * gr[c];
    }
  }
  if (!grad_x) return;
  Matrix z(n, in_dim);
  for (std::size_t r = 0; r < n; ++r) {
    const double* gr = grad_out.data.data() + r * out_dim;
    double* zr = z.data.data() + r * in_dim;
    for (std::size_t a = 0; a < in_dim; ++a) {
      const double* w = weight.data() + a * out_dim;
      double s = 0.0;
      for (std::size_t c = 0; c < out_dim; ++c) s += gr[c] * w[c];
      zr[a] = s;
    }
  }
  *grad_x = spmm(prop, z);  // prop is symmetric
}

Matrix linear_forward(std::span<const double> weight, std::span<const double> bias,
                      std::size_t in_dim, std::size_t out_dim, const Matrix& x) {
  if (x.cols != in_dim) throw std::invalid_argument("linear: input width mismatch");
  Matrix y(x.rows, out_dim);
  for (std::size_t r = 0; r < x.rows; ++r) {
    double* yr = y.data.data() + r * out_dim;
    std::copy(bias.begin(), bias.end(), yr);
    const double* xr = x.data.data() + r * in_dim;
    for (std::size_t a = 0; a < in_dim; ++a) {
      const double v = xr[a];
      const double* w = weight.data() + a * out_dim;
      for (std::size_t c = 0; c < out_dim; ++c) yr[c] += v * w[c];
    }
  }
  return y;
}

void linear_backward(std::span<const double> weight, std::size_t in_dim, std::size_t out_dim,
                     const Matrix& x, const Matrix& grad_out, std::span<double> grad_weight,
                     std::span<double> grad_bias, Matrix* grad_x) {
  const std::size_t n = grad_out.rows;
  for (std::size_t r = 0; r < n; ++r) {
    const double* gr = grad_out.data.data() + r * out_dim;
    for (std::size_t c = 0; c < out_dim; ++c) grad_bias[c] += gr[c];
    const double* xr = x.data.data() + r * in_dim;
    for (std::size_t a = 0; a < in_dim; ++a) {
      const double v = xr[a];
      double* dst = grad_weight.data() + a * out_dim;
      for (std::size_t c = 0; c < out_dim; ++c) dst[c] += v * gr[c];
    }
  }
  if (!grad_x) return;
  Matrix z(n, in_dim);
  for (std::size_t r = 0; r < n; ++r) {
    const double* gr = grad_out.data.data() + r * out_dim;
    double* zr = z.data.data() + r * in_dim;
    for (std::size_t a = 0; a < in_dim; ++a) {
      const double* w = weight.data() + a * out_dim;
      double s = 0.0;
      for (std::size_t c = 0; c < out_dim; ++c) s += gr[c] * w[c];
      zr[a] = s;
    }
  }
  *grad_x = std::move(z);
}

Matrix batchnorm_forward(std::span<const double> gamma, std::span<const double> beta,
                         std::span<double> run_mean, std::span<double> run_var, const Matrix& x,
                         bool training, BatchNormCache* cache, double eps, double momentum) {
  const std::size_t n = x.rows, d = x.cols;
  Matrix y(n, d);
  if (training) {
    if (n < 2) throw std::invalid_argument("batchnorm: training mode needs at least 2 rows");
    std::vector<double> mean(d, 0.0), var(d, 0.0), invstd(d);
    for (std::size_t r = 0; r < n; ++r) {
      const double* xr = x.data.data() + r * d;
      for (std::size_t c = 0; c < d; ++c) mean[c] += xr[c];
    }
    for (std::size_t c = 0; c < d; ++c) mean[c] /= static_cast<double>(n);
    for (std::size_t r = 0; r < n; ++r) {
      const double* xr = x.data.data() + r * d;
      for (std::size_t c = 0; c < d; ++c) {
        const double dev = xr[c] - mean[c];
        var[c] += dev * dev;
      }
    }
    for (std::size_t c = 0; c < d; ++c) {
      var[c] /= static_cast<double>(n);  // biased, used for normalization
      invstd[c] = 1.0 / std::sqrt(var[c] + eps);
    }
    Matrix xhat(n, d);
    for (std::size_t r = 0; r < n; ++r) {
      const double* xr = x.data.data() + r * d;
      double* hr = xhat.data.data() + r * d;
      double* yr = y.data.data() + r * d;
      for (std::size_t c = 0; c < d; ++c) {
        hr[c] = (xr[c] - mean[c]) * invstd[c];
        yr[c] = gamma[c] * hr[c] + beta[c];
      }
    }
    const double unbias = static_cast<double>(n) / static_cast<double>(n - 1);
    for (std::size_t c = 0; c < d; ++c) {
      run_mean[c] = (1.0 - momentum) * run_mean[c] + momentum * mean[c];
      run_var[c] = (1.0 - momentum) * run_var[c] + momentum * var[c] * unbias;
    }
    if (cache) {
      cache->invstd = std::move(invstd);
      cache->xhat = std::move(xhat);
    }
  } else {
    std::vector<double> invstd(d);
    for (std::size_t c = 0; c < d; ++c) invstd[c] = 1.0 / std::sqrt(run_var[c] + eps);
    for (std::size_t r = 0; r < n; ++r) {
      const double* xr = x.data.data() + r * d;
      double* yr = y.data.data() + r * d;
      for (std::size_t c = 0; c < d; ++c)
        yr[c] = gamma[c] * (xr[c] - run_mean[c]) * invstd[c] + beta[c];
    }
  }
  return y;
}

void batchnorm_backward(std::span<const double> gamma, const BatchNormCache& cache,
                        const Matrix& grad_out, std::span<double> grad_gamma,
                        std::span<double> grad_beta, Matrix& grad_x) {
  const std::size_t n = grad_out.rows, d = grad_out.cols;
  std::vector<double> sum_dy(d, 0.0), sum_dy_xhat(d, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    const double* gr = grad_out.data.data() + r * d;
    const double* hr = cache.xhat.data.data() + r * d;
    for (std::size_t c = 0; c < d; ++c) {
      sum_dy[c] += gr[c];
      sum_dy_xhat[c] += gr[c] * hr[c];
    }
  }
  for (std::size_t c = 0; c < d; ++c) {
    grad_gamma[c] += sum_dy_xhat[c];
    grad_beta[c] += sum_dy[c];
  }
  grad_x = Matrix(n, d);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r) {
    const double* gr = grad_out.data.data() + r * d;
    const double* hr = cache.xhat.data.data() + r * d;
    double* dr = grad_x.data.data() + r * d;
    for (std::size_t c = 0; c < d; ++c)
      dr[c] = gamma[c] * cache.invstd[c] *
              (gr[c] - inv_n * sum_dy[c] - hr[c] * inv_n * sum_dy_xhat[c]);
  }
}

Matrix relu_forward(const Matrix& x, std::vector<std::uint8_t>* mask) {
  Matrix y = x;
  if (mask) mask->assign(x.size(), 0);
  for (std::size_t i = 0; i < y.data.size(); ++i) {
    if (y.data[i] > 0.0) {
      if (mask) (*mask)[i] = 1;
    } else {
      y.data[i] = 0.0;
    }
  }
  return y;
}

Matrix relu_backward(const Matrix& grad_out, const std::vector<std::uint8_t>& mask) {
  Matrix g = grad_out;
  for (std::size_t i = 0; i < g.data.size(); ++i)
    if (!mask[i]) g.data[i] = 0.0;
  return g;
}

Matrix mean_pool(const Matrix& x, std::span<const std::size_t> offsets) {
  if (offsets.size() < 2 || offsets.front() != 0 || offsets.back() != x.rows)
    throw std::invalid_argument("mean_pool: offsets must partition the rows");
  const std::size_t g = offsets.size() - 1, d = x.cols;
  Matrix y(g, d, 0.0);
  for (std::size_t gi = 0; gi < g; ++gi) {
    const std::size_t lo = offsets[gi], hi = offsets[gi + 1];
    if (hi <= lo) throw std::invalid_argument("mean_pool: empty graph range");
    double* yr = y.data.data() + gi * d;
    for (std::size_t r = lo; r < hi; ++r) {
      const double* xr = x.data.data() + r * d;
      for (std::size_t c = 0; c < d; ++c) yr[c] += xr[c];
    }
    const double inv = 1.0 / static_cast<double>(hi - lo);
    for (std::size_t c = 0; c < d; ++c) yr[c] *= inv;
  }
  return y;
}

Matrix mean_pool_backward(const Matrix& grad_out, std::span<const std::size_t> offsets,
                          std::size_t n_nodes) {
  const std::size_t d = grad_out.cols;
  Matrix g(n_nodes, d, 0.0);
  for (std::size_t gi = 0; gi + 1 < offsets.size(); ++gi) {
    const std::size_t lo = offsets[gi], hi = offsets[gi + 1];
    const double inv = 1.0 / static_cast<double>(hi - lo);
    const double* gr = grad_out.data.data() + gi * d;
    for (std::size_t r = lo; r < hi; ++r) {
      double* dst = g.data.data() + r * d;
      for (std::size_t c = 0; c < d; ++c) dst[c] = gr[c] * inv;
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// whole-model forward/backward
// ---------------------------------------------------------------------------

void zero_grad(Model& m) { std::fill(m.grads.begin(), m.grads.end(), 0.0); }

Matrix model_forward(Model& m, const BatchedGraph& bg, bool training, ForwardCtx* ctx) {
  ForwardCtx local;
  ForwardCtx& c = ctx ? *ctx : local;
  c.training = training;
  c.offsets = bg.offsets;

  const Graph& g = bg.merged;
  Matrix x;
  if (m.embedding) {
    if (g.feature_kind() != FeatureKind::categorical)
      throw std::invalid_argument("model expects categorical features");
    c.codes = g.codes;
    x = embedding_forward(m.param(m.embedding->table_off, m.embedding->vocab * m.embedding->dim),
                          m.embedding->vocab, m.embedding->dim, g.codes);
  } else {
    if (g.feature_kind() != FeatureKind::dense)
      throw std::invalid_argument("model expects dense features");
    if (g.features.cols != m.spec.input_vocab)
      throw std::invalid_argument("dense input width mismatch");
    x = g.features;
  }
  c.input = x;

  bool any_cheb = false, any_gcn = false;
  for (const ConvBlock& b : m.blocks) {
    any_cheb |= std::holds_alternative<ChebConvLayer>(b.conv);
    any_gcn |= std::holds_alternative<GcnConvLayer>(b.conv);
  }
  if (any_cheb) c.lap = scaled_laplacian(normalized_laplacian(g), 2.0);
  if (any_gcn) c.prop = gcn_propagation(g.adj);

  c.blocks.clear();
  c.blocks.resize(m.blocks.size());
  for (std::size_t i = 0; i < m.blocks.size(); ++i) {
    ConvBlock& b = m.blocks[i];
    ConvBlockCache& bc = c.blocks[i];
    bc.input = x;
    Matrix y;
    if (auto* ch = std::get_if<ChebConvLayer>(&b.conv)) {
      y = cheb_conv_forward(
          m.param(ch->theta_off, (ch->order + 1) * ch->in_dim * ch->out_dim),
          m.param(ch->bias_off, ch->out_dim), ch->order, ch->in_dim, ch->out_dim, c.lap, x,
          &bc.tape);
    } else {
      auto& gc = std::get<GcnConvLayer>(b.conv);
      y = gcn_forward(m.param(gc.weight_off, gc.in_dim * gc.out_dim),
                      m.param(gc.bias_off, gc.out_dim), gc.in_dim, gc.out_dim, c.prop, x, &bc.px);
    }
    y = batchnorm_forward(m.param(b.bn.gamma_off, b.bn.dim), m.param(b.bn.beta_off, b.bn.dim),
                          m.buffer(b.bn.mean_off, b.bn.dim), m.buffer(b.bn.var_off, b.bn.dim), y,
                          training, &bc.bn);
    y = relu_forward(y, &bc.relu_mask);
    if (b.residual) add_in_place(y, bc.input);
    x = std::move(y);
  }

  if (m.pool) {
    c.pool_input = x;
    x = mean_pool(x, c.offsets);
  }

  c.head_inputs.clear();
  c.head_relu.clear();
  c.head_relu.resize(m.head.size());
  for (std::size_t i = 0; i < m.head.size(); ++i) {
    const LinearLayer& l = m.head[i];
    c.head_inputs.push_back(x);
    Matrix y = linear_forward(m.param(l.weight_off, l.in_dim * l.out_dim),
                              m.param(l.bias_off, l.out_dim), l.in_dim, l.out_dim, x);
    if (l.relu_after) y = relu_forward(y, &c.head_relu[i]);
    x = std::move(y);
  }
  return x;
}

void model_backward(Model& m, const ForwardCtx& ctx, const Matrix& grad_out) {
  Matrix grad = grad_out;

  for (std::size_t ii = m.head.size(); ii-- > 0;) {
    const LinearLayer& l = m.head[ii];
    if (l.relu_after) grad = relu_backward(grad, ctx.head_relu[ii]);
    Matrix gx;
    linear_backward(m.param(l.weight_off, l.in_dim * l.out_dim), l.in_dim, l.out_dim,
                    ctx.head_inputs[ii], grad, m.grad(l.weight_off, l.in_dim * l.out_dim),
                    m.grad(l.bias_off, l.out_dim), &gx);
    grad = std::move(gx);
  }

  if (m.pool) grad = mean_pool_backward(grad, ctx.offsets, ctx.pool_input.rows);

  for (std::size_t ii = m.blocks.size(); ii-- > 0;) {
    const ConvBlock& b = m.blocks[ii];
    const ConvBlockCache& bc = ctx.blocks[ii];
    const Matrix skip = b.residual ? grad : Matrix();

    Matrix gy = relu_backward(grad, bc.relu_mask);
    Matrix gbn;
    batchnorm_backward(m.param(b.bn.gamma_off, b.bn.dim), bc.bn, gy,
                       m.grad(b.bn.gamma_off, b.bn.dim), m.grad(b.bn.beta_off, b.bn.dim), gbn);
    Matrix gx;
    if (auto* ch = std::get_if<ChebConvLayer>(&b.conv)) {
      cheb_conv_backward(m.param(ch->theta_off, (ch->order + 1) * ch->in_dim * ch->out_dim),
                         ch->order, ch->in_dim, ch->out_dim, ctx.lap, bc.tape, gbn,
                         m.grad(ch->theta_off, (ch->order + 1) * ch->in_dim * ch->out_dim),
                         m.grad(ch->bias_off, ch->out_dim), &gx);
    } else {
      auto& gc = std::get<GcnConvLayer>(b.conv);
      gcn_backward(m.param(gc.weight_off, gc.in_dim * gc.out_dim), gc.in_dim, gc.out_dim,
                   ctx.prop, bc.px, gbn, m.grad(gc.weight_off, gc.in_dim * gc.out_dim),
                   m.grad(gc.bias_off, gc.out_dim), &gx);
    }
    if (b.residual) add_in_place(gx, skip);
    grad = std::move(gx);
  }

  if (m.embedding)
    embedding_backward(grad, ctx.codes,
                       m.grad(m.embedding->table_off, m.embedding->vocab * m.embedding->dim));
}

}  // namespace chebnet
