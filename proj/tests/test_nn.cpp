#include <doctest.h>

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "chebnet/nn.hpp"
#include "support/reference.hpp"

using namespace chebnet;

namespace {

ScaledLaplacian make_operator(Rng& rng, std::size_t n) {
  const Graph g = testref::random_connected_graph(rng, n, 0.3);
  return scaled_laplacian(normalized_laplacian(g), 2.0);
}

// dense reference: sum_i T_i(S) X Theta_i + bias via explicit matrix recursion
Matrix dense_cheb_conv(const Matrix& s, std::span<const double> theta,
                       std::span<const double> bias, std::size_t order, std::size_t in_dim,
                       std::size_t out_dim, const Matrix& x) {
  std::vector<Matrix> t;
  t.push_back(Matrix::identity(s.rows));
  if (order >= 1) t.push_back(s);
  for (std::size_t i = 2; i <= order; ++i) {
    Matrix next = testref::dense_mul(s, t[i - 1]);
    scale_in_place(next, 2.0);
    sub_in_place(next, t[i - 2]);
    t.push_back(next);
  }
  Matrix y(x.rows, out_dim);
  for (std::size_t r = 0; r < x.rows; ++r)
    for (std::size_t c = 0; c < out_dim; ++c) y(r, c) = bias[c];
  for (std::size_t i = 0; i <= order; ++i) {
    Matrix th(in_dim, out_dim);
    std::copy(theta.begin() + static_cast<std::ptrdiff_t>(i * in_dim * out_dim),
              theta.begin() + static_cast<std::ptrdiff_t>((i + 1) * in_dim * out_dim),
              th.data.begin());
    add_in_place(y, testref::dense_mul(testref::dense_mul(t[i], x), th));
  }
  return y;
}

BatchedGraph toy_batch(Rng& rng, std::size_t n_graphs, std::size_t nodes, std::size_t vocab,
                       std::size_t n_classes, std::vector<Graph>& storage) {
  storage.clear();
  for (std::size_t i = 0; i < n_graphs; ++i) {
    Graph g = testref::random_connected_graph(rng, nodes, 0.3);
    g.codes.resize(nodes);
    for (auto& c : g.codes) c = static_cast<int>(rng.uniform_int(0, vocab - 1));
    g.node_labels.resize(nodes);
    for (auto& l : g.node_labels) l = static_cast<int>(rng.uniform_int(0, n_classes - 1));
    g.graph_label = rng.normal();
    storage.push_back(std::move(g));
  }
  return batch(storage);
}

}  // namespace

TEST_CASE("cheb_conv_forward: identity configuration and channel collapse") {
  Rng rng(17);
  const std::size_t n = 8;
  const ScaledLaplacian lap = make_operator(rng, n);
  const Matrix x = testref::random_matrix(rng, n, 3);

  SUBCASE("order 0 with identity weights reproduces the input") {
    std::vector<double> theta(3 * 3, 0.0);
    for (std::size_t i = 0; i < 3; ++i) theta[i * 3 + i] = 1.0;
    std::vector<double> bias(3, 0.0);
    const Matrix y = cheb_conv_forward(theta, bias, 0, 3, 3, lap, x, nullptr);
    CHECK(max_abs_diff(y, x) == 0.0);
  }
  SUBCASE("1x1 channels reduce to the single-channel filter") {
    const Matrix h = testref::random_matrix(rng, n, 1);
    const std::vector<double> theta{0.4, -1.1, 0.6};
    const std::vector<double> bias{0.0};
    const Matrix y = cheb_conv_forward(theta, bias, 2, 1, 1, lap, h, nullptr);
    const Matrix ref = cheb_apply(lap, ChebCoeffs{{0.4, -1.1, 0.6}}, h).output;
    CHECK(relative_diff(y, ref) <= 1e-14);
  }
  SUBCASE("random instance matches the dense construction") {
    const std::size_t in = 3, out = 2, order = 2;
    std::vector<double> theta((order + 1) * in * out), bias(out);
    for (auto& t : theta) t = rng.normal();
    for (auto& b : bias) b = rng.normal();
    const Matrix y = cheb_conv_forward(theta, bias, order, in, out, lap, x, nullptr);
    const Matrix ref = dense_cheb_conv(to_dense(lap.matrix), theta, bias, order, in, out, x);
    CHECK(relative_diff(y, ref) <= 1e-10);
  }
}

TEST_CASE("gcn: propagation matrix and forward") {
  SUBCASE("single node without edges") {
    const Graph g = build_graph(1, std::vector<EdgeSpec>{});
    const SparseMatrix p = gcn_propagation(g.adj);
    CHECK(to_dense(p)(0, 0) == 1.0);
    Rng rng(1);
    const Matrix x = testref::random_matrix(rng, 1, 3);
    std::vector<double> w(3 * 2), b(2);
    for (auto& v : w) v = rng.normal();
    for (auto& v : b) v = rng.normal();
    const Matrix y = gcn_forward(w, b, 3, 2, p, x, nullptr);
    Matrix ref(1, 2);
    for (std::size_t c = 0; c < 2; ++c) {
      ref(0, c) = b[c];
      for (std::size_t a = 0; a < 3; ++a) ref(0, c) += x(0, a) * w[a * 2 + c];
    }
    CHECK(relative_diff(y, ref) <= 1e-15);
  }
  SUBCASE("path graph averages both endpoints") {
    const Graph g = build_graph(2, std::vector<EdgeSpec>{{0, 1}});
    const Matrix p = to_dense(gcn_propagation(g.adj));
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t j = 0; j < 2; ++j) CHECK(p(i, j) == doctest::Approx(0.5).epsilon(1e-15));
  }
  SUBCASE("random instance matches the dense product") {
    Rng rng(31);
    const Graph g = testref::random_connected_graph(rng, 10, 0.3);
    const SparseMatrix prop = gcn_propagation(g.adj);
    const Matrix x = testref::random_matrix(rng, 10, 4);
    std::vector<double> w(4 * 3), b(3, 0.0);
    for (auto& v : w) v = rng.normal();
    Matrix wm(4, 3);
    std::copy(w.begin(), w.end(), wm.data.begin());
    const Matrix ref = testref::dense_mul(testref::dense_mul(to_dense(prop), x), wm);
    CHECK(relative_diff(gcn_forward(w, b, 4, 3, prop, x, nullptr), ref) <= 1e-12);
  }
}

TEST_CASE("embedding: row gather and scatter-add gradient") {
  SUBCASE("rows selected verbatim") {
    std::vector<double> table{1.0, 0.0, 0.0, 1.0};  // 2x2 identity-like
    const std::vector<int> codes{1, 0, 1};
    const Matrix out = embedding_forward(table, 2, 2, codes);
    CHECK(out(0, 0) == 0.0);
    CHECK(out(0, 1) == 1.0);
    CHECK(out(1, 0) == 1.0);
    CHECK(out(2, 1) == 1.0);
  }
  SUBCASE("vocabulary 7 mapped to 70 channels") {
    Rng rng(2);
    std::vector<double> table(7 * 70);
    for (auto& v : table) v = rng.normal();
    std::vector<int> codes(12);
    for (auto& c : codes) c = static_cast<int>(rng.uniform_int(0, 6));
    const Matrix out = embedding_forward(table, 7, 70, codes);
    CHECK(out.rows == 12);
    CHECK(out.cols == 70);
  }
  SUBCASE("out-of-vocabulary code is rejected") {
    std::vector<double> table(4, 0.0);
    CHECK_THROWS_AS(embedding_forward(table, 2, 2, std::vector<int>{2}), std::invalid_argument);
  }
  SUBCASE("gradient is a scatter-add of the output gradients") {
    Rng rng(3);
    std::vector<double> table(3 * 2);
    for (auto& v : table) v = rng.normal();
    const std::vector<int> codes{0, 2, 0};
    const Matrix g = testref::random_matrix(rng, 3, 2);

    std::vector<double> analytic(table.size(), 0.0);
    embedding_backward(g, codes, analytic);

    const auto loss = [&] {
      return dot_all(g, embedding_forward(table, 3, 2, codes));
    };
    const std::vector<double> fd = testref::central_differences(loss, table, 1e-6);
    CHECK(testref::grad_error(fd, analytic) <= 1e-7);
  }
}

TEST_CASE("batchnorm: normalization behavior and gradient") {
  Rng rng(5);
  const std::size_t n = 40, d = 3;

  SUBCASE("constant column collapses to beta") {
    Matrix x(n, d, 2.5);
    std::vector<double> gamma(d, 1.0), beta{0.1, -0.2, 0.3}, rm(d, 0.0), rv(d, 1.0);
    const Matrix y = batchnorm_forward(gamma, beta, rm, rv, x, true, nullptr);
    for (std::size_t c = 0; c < d; ++c)
      CHECK(y(0, c) == doctest::Approx(beta[c]).epsilon(1e-9));
  }
  SUBCASE("unit-variance input passes through nearly unchanged") {
    Matrix x = testref::random_matrix(rng, 400, 1);
    double mean = 0.0;
    for (const double v : x.data) mean += v;
    mean /= 400.0;
    double var = 0.0;
    for (const double v : x.data) var += (v - mean) * (v - mean);
    var /= 400.0;
    for (auto& v : x.data) v = (v - mean) / std::sqrt(var);  // exactly standardized

    std::vector<double> gamma{1.0}, beta{0.0}, rm{0.0}, rv{1.0};
    const Matrix y = batchnorm_forward(gamma, beta, rm, rv, x, true, nullptr);
    CHECK(max_abs_diff(y, x) <= 1e-4);  // eps in the denominator keeps it from being exact
  }
  SUBCASE("training mode needs two rows") {
    std::vector<double> gamma(d, 1.0), beta(d, 0.0), rm(d, 0.0), rv(d, 1.0);
    CHECK_THROWS_AS(batchnorm_forward(gamma, beta, rm, rv, Matrix(1, d, 1.0), true, nullptr),
                    std::invalid_argument);
  }
  SUBCASE("backward matches finite differences") {
    Matrix x = testref::random_matrix(rng, 12, d);
    std::vector<double> gamma{1.2, 0.8, -0.5}, beta{0.1, 0.0, -0.3};
    const Matrix g = testref::random_matrix(rng, 12, d);

    const auto loss = [&] {
      std::vector<double> rm(d, 0.0), rv(d, 1.0);
      return dot_all(g, batchnorm_forward(gamma, beta, rm, rv, x, true, nullptr));
    };

    std::vector<double> rm(d, 0.0), rv(d, 1.0);
    BatchNormCache cache;
    batchnorm_forward(gamma, beta, rm, rv, x, true, &cache);
    std::vector<double> dgamma(d, 0.0), dbeta(d, 0.0);
    Matrix dx;
    batchnorm_backward(gamma, cache, g, dgamma, dbeta, dx);

    CHECK(testref::grad_error(testref::central_differences(loss, gamma, 1e-5), dgamma) <= 1e-4);
    CHECK(testref::grad_error(testref::central_differences(loss, beta, 1e-5), dbeta) <= 1e-4);
    std::vector<double> dxv(dx.data.begin(), dx.data.end());
    CHECK(testref::grad_error(testref::central_differences(loss, x.data, 1e-5), dxv) <= 1e-4);
  }
}

TEST_CASE("mean_pool: per-graph averages and broadcast gradient") {
  SUBCASE("identical rows pool to that row") {
    Matrix x(3, 2);
    for (std::size_t r = 0; r < 3; ++r) {
      x(r, 0) = 1.5;
      x(r, 1) = -2.0;
    }
    const std::vector<std::size_t> offsets{0, 3};
    const Matrix y = mean_pool(x, offsets);
    CHECK(y(0, 0) == doctest::Approx(1.5));
    CHECK(y(0, 1) == doctest::Approx(-2.0));
  }
  SUBCASE("two graphs pool independently") {
    Matrix x(3, 1);
    x(0, 0) = 1.0;
    x(1, 0) = 3.0;
    x(2, 0) = 5.0;
    const std::vector<std::size_t> offsets{0, 2, 3};
    const Matrix y = mean_pool(x, offsets);
    CHECK(y(0, 0) == doctest::Approx(2.0));
    CHECK(y(1, 0) == doctest::Approx(5.0));
  }
  SUBCASE("gradient broadcasts 1/n_g") {
    Rng rng(9);
    Matrix x = testref::random_matrix(rng, 5, 2);
    const std::vector<std::size_t> offsets{0, 2, 5};
    const Matrix g = testref::random_matrix(rng, 2, 2);
    const Matrix dx = mean_pool_backward(g, offsets, 5);
    const auto loss = [&] { return dot_all(g, mean_pool(x, offsets)); };
    std::vector<double> dxv(dx.data.begin(), dx.data.end());
    CHECK(testref::grad_error(testref::central_differences(loss, x.data, 1e-6), dxv) <= 1e-8);
  }
}

TEST_CASE("relu and linear: basics plus gradients") {
  Rng rng(13);
  SUBCASE("relu zeroes the negative part") {
    Matrix x(1, 4);
    x.data = {-1.0, 0.0, 2.0, -0.5};
    const Matrix y = relu_forward(x, nullptr);
    CHECK(y.data == std::vector<double>{0.0, 0.0, 2.0, 0.0});
  }
  SUBCASE("identity linear layer") {
    std::vector<double> w{1.0, 0.0, 0.0, 1.0}, b{0.0, 0.0};
    const Matrix x = testref::random_matrix(rng, 5, 2);
    CHECK(max_abs_diff(linear_forward(w, b, 2, 2, x), x) == 0.0);
  }
  SUBCASE("linear gradients match finite differences") {
    const std::size_t in = 3, out = 2;
    std::vector<double> w(in * out), b(out);
    for (auto& v : w) v = rng.normal();
    for (auto& v : b) v = rng.normal();
    Matrix x = testref::random_matrix(rng, 6, in);
    const Matrix g = testref::random_matrix(rng, 6, out);

    std::vector<double> dw(w.size(), 0.0), db(b.size(), 0.0);
    Matrix dx;
    linear_backward(w, in, out, x, g, dw, db, &dx);

    const auto loss = [&] { return dot_all(g, linear_forward(w, b, in, out, x)); };
    CHECK(testref::grad_error(testref::central_differences(loss, w, 1e-6), dw) <= 1e-8);
    CHECK(testref::grad_error(testref::central_differences(loss, b, 1e-6), db) <= 1e-8);
    std::vector<double> dxv(dx.data.begin(), dx.data.end());
    CHECK(testref::grad_error(testref::central_differences(loss, x.data, 1e-6), dxv) <= 1e-8);
  }
}

TEST_CASE("parse_model_spec: vocabulary, grammar, and canonical form") {
  const ModelSpec cluster = parse_model_spec(
      "7 -E70 -ChN70 -ChN70 -ChN70 -ChN70 -MP70 -L35 -L17 -L6", TaskKind::node_classification, 5);
  CHECK(cluster.input_vocab == 7);
  CHECK(cluster.layers.size() == 9);
  CHECK(cluster.residual);
  CHECK(cluster.output_dim() == 6);
  CHECK(cluster.arch == "7 -E70 -ChN70 -ChN70 -ChN70 -ChN70 -MP70 -L35 -L17 -L6");

  const ModelSpec zinc = parse_model_spec(
      "28 -E106 -ChN106 -ChN106 -ChN106 -ChN106 -MP106 -L53 -L26 -L1 (No-RC)",
      TaskKind::graph_regression, 2);
  CHECK_FALSE(zinc.residual);
  CHECK(zinc.output_dim() == 1);

  CHECK_THROWS_AS(parse_model_spec("7 -E70 -XX70", TaskKind::node_classification, 5),
                  std::invalid_argument);
  CHECK_THROWS_AS(parse_model_spec("7 -E70 -MP35", TaskKind::node_classification, 5),
                  std::invalid_argument);  // dimension-chain break
  CHECK_THROWS_AS(parse_model_spec("7 -E70 -ChN70 -L6 -MP70", TaskKind::node_classification, 5),
                  std::invalid_argument);  // pool after linear stage
  CHECK_THROWS_AS(parse_model_spec("28 -E106 -ChN106 -L1", TaskKind::graph_regression, 2),
                  std::invalid_argument);  // graph task without pooling
}

TEST_CASE("param_count: reproduces the reference budgets") {
  const ModelSpec cluster = parse_model_spec(
      "7 -E70 -ChN70 -ChN70 -ChN70 -ChN70 -MP70 -L35 -L17 -L6", TaskKind::node_classification, 5);
  CHECK(param_count(cluster) == 102535);

  const ModelSpec pattern = parse_model_spec(
      "3 -E70 -ChN70 -ChN70 -ChN70 -ChN70 -MP70 -L35 -L17 -L2", TaskKind::node_classification, 5);
  CHECK(param_count(pattern) == 102183);

  const ModelSpec zinc = parse_model_spec(
      "28 -E106 -ChN106 -ChN106 -ChN106 -ChN106 -MP106 -L53 -L26 -L1 (No-RC)",
      TaskKind::graph_regression, 2);
  CHECK(param_count(zinc) == 101230);

  for (const auto* s : {&cluster, &pattern, &zinc}) CHECK(param_count(*s) <= 110000);

  // tiny hand-counted case: 3*4 embedding + (4*2+2) linear = 22
  const ModelSpec tiny = parse_model_spec("3 -E4 -L2", TaskKind::node_classification, 1);
  CHECK(param_count(tiny) == 22);
}

TEST_CASE("build_model: deterministic init and flat-view aliasing") {
  const ModelSpec spec =
      parse_model_spec("3 -E8 -ChN8 -MP8 -L4", TaskKind::node_classification, 3);
  Model a = build_model(spec, 42);
  const Model b = build_model(spec, 42);
  CHECK(a.params == b.params);
  const Model c = build_model(spec, 43);
  CHECK(a.params != c.params);
  CHECK(a.params.size() == param_count(spec));

  // layer views alias the flat storage
  REQUIRE(a.embedding.has_value());
  const auto table = a.param(a.embedding->table_off, 4);
  a.params[a.embedding->table_off] = 123.0;
  CHECK(table[0] == 123.0);
}

TEST_CASE("model_forward: deterministic, equivariant, batch-consistent") {
  Rng rng(1001);
  const ModelSpec spec =
      parse_model_spec("4 -E10 -ChN10 -ChN10 -MP10 -L5 -L3", TaskKind::node_classification, 3);
  Model model = build_model(spec, 7);

  std::vector<Graph> storage;
  const BatchedGraph bg = toy_batch(rng, 3, 9, 4, 3, storage);

  SUBCASE("frozen seed forward is bit-reproducible") {
    const Matrix o1 = model_forward(model, bg, false);
    const Matrix o2 = model_forward(model, bg, false);
    CHECK(o1.data == o2.data);
  }

  SUBCASE("node permutation permutes node outputs identically") {
    Graph g = storage[0];
    const std::size_t n = g.n_nodes;
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    rng.shuffle(perm);  // perm[old] = new position

    std::vector<EdgeSpec> edges;
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t k = g.adj.offsets[r]; k < g.adj.offsets[r + 1]; ++k)
        if (g.adj.indices[k] > r)
          edges.push_back({perm[r], perm[g.adj.indices[k]], g.adj.values[k]});
    Graph pg = build_graph(n, edges);
    pg.codes.resize(n);
    for (std::size_t u = 0; u < n; ++u) pg.codes[perm[u]] = g.codes[u];

    const Matrix base = model_forward(model, batch(std::vector<Graph>{g}), false);
    const Matrix permuted = model_forward(model, batch(std::vector<Graph>{pg}), false);
    double worst = 0.0;
    for (std::size_t u = 0; u < n; ++u)
      for (std::size_t c = 0; c < base.cols; ++c)
        worst = std::max(worst, std::abs(base(u, c) - permuted(perm[u], c)));
    CHECK(worst <= 1e-9);
  }

  SUBCASE("batched eval equals per-graph eval") {
    const Matrix whole = model_forward(model, bg, false);
    std::size_t row = 0;
    for (const Graph& g : storage) {
      const Matrix single = model_forward(model, batch(std::vector<Graph>{g}), false);
      for (std::size_t r = 0; r < single.rows; ++r)
        for (std::size_t c = 0; c < single.cols; ++c)
          CHECK(std::abs(whole(row + r, c) - single(r, c)) <= 1e-10);
      row += g.n_nodes;
    }
  }
}

TEST_CASE("pooled graph outputs are invariant under node permutation") {
  Rng rng(2002);
  const ModelSpec spec =
      parse_model_spec("4 -E8 -ChN8 -MP8 -L4 -L1", TaskKind::graph_regression, 3);
  Model model = build_model(spec, 11);

  Graph g = testref::random_connected_graph(rng, 10, 0.3);
  g.codes.resize(10);
  for (auto& c : g.codes) c = static_cast<int>(rng.uniform_int(0, 3));
  g.graph_label = 0.0;

  std::vector<std::size_t> perm(10);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  rng.shuffle(perm);
  std::vector<EdgeSpec> edges;
  for (std::size_t r = 0; r < 10; ++r)
    for (std::size_t k = g.adj.offsets[r]; k < g.adj.offsets[r + 1]; ++k)
      if (g.adj.indices[k] > r) edges.push_back({perm[r], perm[g.adj.indices[k]], g.adj.values[k]});
  Graph pg = build_graph(10, edges);
  pg.codes.resize(10);
  for (std::size_t u = 0; u < 10; ++u) pg.codes[perm[u]] = g.codes[u];
  pg.graph_label = 0.0;

  const Matrix a = model_forward(model, batch(std::vector<Graph>{g}), false);
  const Matrix b = model_forward(model, batch(std::vector<Graph>{pg}), false);
  CHECK(std::abs(a(0, 0) - b(0, 0)) <= 1e-9);
}

TEST_CASE("whole-model gradient matches finite differences") {
  Rng rng(3003);

  const auto check_model = [&](const ModelSpec& spec, const BatchedGraph& bg,
                               const std::vector<Graph>& storage) {
    Model model = build_model(spec, 99);

    const auto loss_value = [&]() -> double {
      Matrix out = model_forward(model, bg, true);
      double s = 0.0;  // fixed quadratic readout keeps the loss smooth
      for (std::size_t i = 0; i < out.data.size(); ++i)
        s += (0.3 + 0.1 * static_cast<double>(i % 7)) * out.data[i] * out.data[i];
      return s;
    };

    ForwardCtx ctx;
    Matrix out = model_forward(model, bg, true, &ctx);
    Matrix grad_out(out.rows, out.cols);
    for (std::size_t i = 0; i < out.data.size(); ++i)
      grad_out.data[i] = 2.0 * (0.3 + 0.1 * static_cast<double>(i % 7)) * out.data[i];
    zero_grad(model);
    model_backward(model, ctx, grad_out);
    const std::vector<double> analytic = model.grads;

    const std::vector<double> fd = testref::central_differences(loss_value, model.params, 1e-4);
    CHECK(testref::grad_error(fd, analytic) <= 1e-4);
    (void)storage;
  };

  SUBCASE("node-classification toy model") {
    std::vector<Graph> storage;
    const BatchedGraph bg = toy_batch(rng, 2, 6, 3, 2, storage);
    check_model(parse_model_spec("3 -E4 -ChN4 -ChN4 -MP4 -L3 -L2", TaskKind::node_classification, 3),
                bg, storage);
  }
  SUBCASE("graph-regression toy model with pooling") {
    std::vector<Graph> storage;
    const BatchedGraph bg = toy_batch(rng, 3, 6, 3, 2, storage);
    check_model(parse_model_spec("3 -E4 -ChN4 -MP4 -L2 -L1", TaskKind::graph_regression, 2), bg,
                storage);
  }
  SUBCASE("gcn baseline block") {
    std::vector<Graph> storage;
    const BatchedGraph bg = toy_batch(rng, 2, 6, 3, 2, storage);
    check_model(parse_model_spec("3 -E4 -GCN4 -GCN4 -MP4 -L2", TaskKind::node_classification, 1),
                bg, storage);
  }
}
