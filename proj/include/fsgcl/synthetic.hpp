#pragma once

#include <cstdint>
#include <vector>

#include "fsgcl/graph.hpp"

namespace fsgcl {

/// Overlapping-community benchmark parameters (LFR-style, simplified).
struct SynthConfig {
  std::size_t n = 1000;
  double avg_degree = 20.0;
  std::size_t max_degree = 50;
  double mu = 0.2;
  std::size_t minc = 150;
  std::size_t maxc = 300;
  std::size_t overlap_nodes = 800;
  std::size_t memberships = 2;
  std::size_t num_communities = 8;
  double degree_exponent = 2.5;
  /// Standard deviation of the Gaussian noise on the indicator block.
  double feature_noise = 0.3;
  /// Width of the pure-noise block appended to the indicator block.
  std::size_t noise_dim = 0;
  std::size_t max_retries = 20;
  std::uint64_t seed = 0;

  /// Throws ConfigError when an invariant is violated.
  void validate() const;
};

struct SynthData {
  SparseGraph graph;
  FeatureMatrix features;
  LabelSet labels;
  std::vector<std::size_t> community_sizes;
};

/// Planted overlapping communities with truncated power-law degrees. Each node
/// sends round((1 - mu) * degree) stubs into its communities and the rest to
/// nodes sharing none of them; stubs are paired configuration-model style and
/// self-loops and repeated pairs are discarded.
SynthData generate(const SynthConfig& cfg);

/// Fraction of undirected edges whose endpoints share no community.
double inter_community_fraction(const SparseGraph& g, const LabelSet& labels);

}  // namespace fsgcl
