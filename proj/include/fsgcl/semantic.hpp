#pragma once

#include <string>
#include <vector>

#include "fsgcl/graph.hpp"
#include "fsgcl/motif.hpp"

namespace fsgcl {

/// One top-k feature-similarity graph per motif. Rows hold at most `k`
/// entries; the matrices are generally asymmetric.
struct SemanticGraphSet {
  std::vector<SparseGraph> graphs;
  std::vector<std::string> motif_names;
  /// Instance count per motif, reported alongside the graphs.
  std::vector<std::size_t> instance_counts;
  std::size_t k = 0;

  std::size_t size() const noexcept { return graphs.size(); }
};

/// cos(X_u, X_v) evaluated only on the support of `mask`. Zero-norm rows give
/// cosine 0; such entries are stored as explicit zeros.
SparseGraph masked_cosine(const FeatureMatrix& x, const SparseGraph& mask);

/// Keeps the k largest stored values of each row, skipping explicit zeros.
/// Ties at the cut-off prefer the smaller column id.
SparseGraph topk_rows(const SparseGraph& m, std::size_t k);

/// Dense cosine top-k without a motif mask (diagonal excluded).
SparseGraph topk_cosine(const FeatureMatrix& x, std::size_t k);

struct SemanticBuildOptions {
  unsigned workers = 1;
};

/// enumerate -> cooccurrence -> nonzero_mask -> masked_cosine -> topk_rows,
/// once per motif.
SemanticGraphSet build_semantic_graphs(const SparseGraph& g, const FeatureMatrix& x,
                                       const std::vector<MotifPattern>& patterns, std::size_t k,
                                       SemanticBuildOptions options = {});

}  // namespace fsgcl
