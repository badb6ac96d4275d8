#include "chebnet/data.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "chebnet/rng.hpp"

namespace chebnet {

void SbmConfig::validate() const {
  if (n_communities == 0) throw std::invalid_argument("sbm: need at least one community");
  if (size_min < 1 || size_max < size_min)
    throw std::invalid_argument("sbm: invalid community size range");
  if (!(q >= 0.0 && q < p && p <= 1.0))
    throw std::invalid_argument("sbm: probabilities must satisfy 0 <= q < p <= 1");
  if (seeds_per_community < 1 || seeds_per_community > size_min)
    throw std::invalid_argument("sbm: seeds_per_community must be in [1, size_min]");
}

void PatternConfig::validate() const {
  if (pattern_size < 1) throw std::invalid_argument("pattern: pattern_size must be >= 1");
  if (n_patterns < 1) throw std::invalid_argument("pattern: need at least one pattern");
  host.validate();
  const double ap = effective_attach_prob();
  if (!(ap >= 0.0 && ap <= 1.0)) throw std::invalid_argument("pattern: invalid attach probability");
}

namespace {

// One SBM draw. Returns block-layout community assignment through `comm`.
Graph sample_sbm(const SbmConfig& cfg, Rng& rng, std::vector<int>* comm_out) {
  std::vector<std::size_t> sizes(cfg.n_communities);
  for (auto& s : sizes) s = rng.uniform_int(cfg.size_min, cfg.size_max);
  const std::size_t n = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});

  std::vector<int> comm(n);
  {
    std::size_t node = 0;
    for (std::size_t c = 0; c < cfg.n_communities; ++c)
      for (std::size_t i = 0; i < sizes[c]; ++i) comm[node++] = static_cast<int>(c);
  }

  std::vector<EdgeSpec> edges;
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = u + 1; v < n; ++v) {
      const double prob = comm[u] == comm[v] ? cfg.p : cfg.q;
      if (rng.bernoulli(prob)) edges.push_back({u, v, 1.0});
    }

  Graph g = build_graph(n, edges);
  if (comm_out) *comm_out = std::move(comm);
  return g;
}

}  // namespace

Dataset gen_cluster_like(const SbmConfig& cfg, std::size_t n_graphs) {
  cfg.validate();
  Dataset ds;
  ds.task = TaskKind::node_classification;
  ds.vocab = cfg.n_communities + 1;  // code 0 = unlabeled
  ds.graphs.reserve(n_graphs);

  for (std::size_t gi = 0; gi < n_graphs; ++gi) {
    Rng rng(derive_seed(cfg.seed, gi));
    std::vector<int> comm;
    Graph g = sample_sbm(cfg, rng, &comm);

    g.codes.assign(g.n_nodes, 0);
    g.node_labels.resize(g.n_nodes);
    for (std::size_t u = 0; u < g.n_nodes; ++u) g.node_labels[u] = comm[u];

    // reveal seeds_per_community nodes per community via their feature code
    std::size_t base = 0;
    for (std::size_t c = 0; c < cfg.n_communities; ++c) {
      std::size_t count = 0;
      while (base + count < g.n_nodes && comm[base + count] == static_cast<int>(c)) ++count;
      std::vector<std::size_t> members(count);
      std::iota(members.begin(), members.end(), base);
      rng.shuffle(members);
      for (std::size_t s = 0; s < cfg.seeds_per_community && s < members.size(); ++s)
        g.codes[members[s]] = static_cast<int>(c) + 1;
      base += count;
    }
    g.id = static_cast<std::int64_t>(gi);
    ds.graphs.push_back(std::move(g));
  }
  return ds;
}

Dataset gen_pattern_like(const PatternConfig& cfg, std::size_t n_graphs) {
  cfg.validate();
  const double attach = cfg.effective_attach_prob();
  constexpr std::size_t kPatternVocab = 3;

  // pre-generate the pattern library: fixed structure and fixed features
  struct Pattern {
    std::vector<EdgeSpec> edges;
    std::vector<int> codes;
  };
  std::vector<Pattern> patterns(cfg.n_patterns);
  {
    Rng prng(derive_seed(cfg.seed, 0x9A77E2));
    for (auto& pat : patterns) {
      for (std::size_t u = 0; u < cfg.pattern_size; ++u)
        for (std::size_t v = u + 1; v < cfg.pattern_size; ++v)
          if (prng.bernoulli(cfg.host.p)) pat.edges.push_back({u, v, 1.0});
      pat.codes.resize(cfg.pattern_size);
      for (auto& c : pat.codes) c = static_cast<int>(prng.uniform_int(0, kPatternVocab - 1));
    }
  }

  Dataset ds;
  ds.task = TaskKind::node_classification;
  ds.vocab = kPatternVocab;
  ds.graphs.reserve(n_graphs);

  for (std::size_t gi = 0; gi < n_graphs; ++gi) {
    Rng rng(derive_seed(cfg.seed, gi + 1));
    Graph host = sample_sbm(cfg.host, rng, nullptr);
    const Pattern& pat = patterns[rng.uniform_int(0, cfg.n_patterns - 1)];

    const std::size_t n = host.n_nodes + cfg.pattern_size;
    std::vector<EdgeSpec> edges;
    for (std::size_t r = 0; r < host.adj.n; ++r)
      for (std::size_t k = host.adj.offsets[r]; k < host.adj.offsets[r + 1]; ++k)
        if (host.adj.indices[k] > r) edges.push_back({r, host.adj.indices[k], host.adj.values[k]});
    for (const EdgeSpec& e : pat.edges)
      edges.push_back({host.n_nodes + e.u, host.n_nodes + e.v, 1.0});
    for (std::size_t pu = 0; pu < cfg.pattern_size; ++pu)
      for (std::size_t hv = 0; hv < host.n_nodes; ++hv)
        if (rng.bernoulli(attach)) edges.push_back({host.n_nodes + pu, hv, 1.0});

    Graph g = build_graph(n, edges);
    g.codes.resize(n);
    for (std::size_t u = 0; u < host.n_nodes; ++u)
      g.codes[u] = static_cast<int>(rng.uniform_int(0, kPatternVocab - 1));
    for (std::size_t u = 0; u < cfg.pattern_size; ++u)
      g.codes[host.n_nodes + u] = pat.codes[u];
    g.node_labels.assign(n, 0);
    for (std::size_t u = host.n_nodes; u < n; ++u) g.node_labels[u] = 1;
    g.id = static_cast<std::int64_t>(gi);
    ds.graphs.push_back(std::move(g));
  }
  return ds;
}

void split_dataset(Dataset& ds, double train_frac, double val_frac, double test_frac,
                   std::uint64_t seed) {
  const double total = train_frac + val_frac + test_frac;
  if (std::abs(total - 1.0) > 1e-9)
    throw std::invalid_argument("split: fractions must sum to 1");
  if (train_frac < 0.0 || val_frac < 0.0 || test_frac < 0.0)
    throw std::invalid_argument("split: fractions must be non-negative");

  std::vector<std::size_t> idx(ds.graphs.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(idx);

  const std::size_t n = idx.size();
  const auto n_train = static_cast<std::size_t>(std::llround(train_frac * static_cast<double>(n)));
  const auto n_val = static_cast<std::size_t>(std::llround(val_frac * static_cast<double>(n)));

  Splits s;
  s.train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(std::min(n_train, n)));
  s.val.assign(idx.begin() + static_cast<std::ptrdiff_t>(std::min(n_train, n)),
               idx.begin() + static_cast<std::ptrdiff_t>(std::min(n_train + n_val, n)));
  s.test.assign(idx.begin() + static_cast<std::ptrdiff_t>(std::min(n_train + n_val, n)), idx.end());
  set_splits(ds, std::move(s));
}

void set_splits(Dataset& ds, Splits splits) {
  std::vector<bool> seen(ds.graphs.size(), false);
  auto check = [&](const std::vector<std::size_t>& part) {
    for (const std::size_t i : part) {
      if (i >= ds.graphs.size()) throw std::invalid_argument("split: index out of range");
      if (seen[i]) throw std::invalid_argument("split: overlapping split indices");
      seen[i] = true;
    }
  };
  check(splits.train);
  check(splits.val);
  check(splits.test);
  ds.splits = std::move(splits);
}

}  // namespace chebnet
