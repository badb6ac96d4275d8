#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "chebnet/graph.hpp"
#include "chebnet/nn.hpp"

namespace chebnet {

/// Stochastic block model for community-detection graphs: sizes drawn
/// uniformly from [size_min, size_max] per community, intra-community edges
/// with probability p, inter-community with q < p. One randomly chosen node
/// per community carries its community id as a feature (code community+1);
/// all other nodes are coded 0.
struct SbmConfig {
  std::size_t n_communities = 6;
  std::size_t size_min = 5;
  std::size_t size_max = 35;
  double p = 0.55;
  double q = 0.25;
  std::size_t seeds_per_community = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Pattern-matching task: an SBM host graph plus one of `n_patterns`
/// pre-generated random subgraphs attached to it. Pattern nodes are labeled
/// 1, host nodes 0; every node carries a random categorical code from a
/// 3-symbol vocabulary. Pattern-internal edges use the host intra
/// probability; attach_prob < 0 defaults to host.q / 2.
struct PatternConfig {
  std::size_t pattern_size = 20;
  SbmConfig host;
  std::size_t n_patterns = 100;
  double attach_prob = -1.0;
  std::uint64_t seed = 0;

  double effective_attach_prob() const { return attach_prob < 0.0 ? host.q / 2.0 : attach_prob; }
  void validate() const;
};

struct Splits {
  std::vector<std::size_t> train, val, test;
};

struct Dataset {
  std::vector<Graph> graphs;
  TaskKind task = TaskKind::node_classification;
  std::size_t vocab = 0;  // categorical feature vocabulary (0 for dense features)
  Splits splits;

  std::size_t size() const { return graphs.size(); }
};

Dataset gen_cluster_like(const SbmConfig& cfg, std::size_t n_graphs);
Dataset gen_pattern_like(const PatternConfig& cfg, std::size_t n_graphs);

/// Shuffled split by fractions (must sum to 1); reproducible for a fixed seed.
void split_dataset(Dataset& ds, double train_frac, double val_frac, double test_frac,
                   std::uint64_t seed);
void set_splits(Dataset& ds, Splits splits);

}  // namespace chebnet
