#include "fsgcl/semantic.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>

#include "fsgcl/error.hpp"

namespace fsgcl {

SparseGraph masked_cosine(const FeatureMatrix& x, const SparseGraph& mask) {
  if (static_cast<std::size_t>(x.rows()) != mask.num_nodes())
    throw ContractError("masked_cosine: feature rows (" + std::to_string(x.rows()) +
                        ") != mask nodes (" + std::to_string(mask.num_nodes()) + ")");
  const Eigen::VectorXd norms = x.rowwise().norm();
  std::vector<std::size_t> row_ptr(mask.row_ptr().begin(), mask.row_ptr().end());
  std::vector<NodeId> col_idx(mask.col_idx().begin(), mask.col_idx().end());
  std::vector<double> values(mask.nnz(), 0.0);
  for (NodeId u = 0; u < mask.num_nodes(); ++u) {
    for (std::size_t e = row_ptr[u]; e < row_ptr[u + 1]; ++e) {
      const NodeId v = col_idx[e];
      const double denom = norms[u] * norms[v];
      values[e] = denom > 0.0 ? x.row(u).dot(x.row(v)) / denom : 0.0;
    }
  }
  return SparseGraph(mask.num_nodes(), std::move(row_ptr), std::move(col_idx), std::move(values));
}

SparseGraph topk_rows(const SparseGraph& m, std::size_t k) {
  if (k == 0) throw ContractError("topk_rows: k must be >= 1");
  std::vector<std::size_t> row_ptr{0};
  std::vector<NodeId> col_idx;
  std::vector<double> values;
  std::vector<std::size_t> slots;
  for (NodeId u = 0; u < m.num_nodes(); ++u) {
    const auto nb = m.neighbors(u);
    const auto vals = m.row_values(u);
    slots.clear();
    for (std::size_t s = 0; s < nb.size(); ++s)
      if (vals[s] != 0.0) slots.push_back(s);
    // Columns are sorted, so a stable sort on value breaks ties by node id.
    std::stable_sort(slots.begin(), slots.end(),
                     [&](std::size_t a, std::size_t b) { return vals[a] > vals[b]; });
    if (slots.size() > k) slots.resize(k);
    std::sort(slots.begin(), slots.end());
    for (std::size_t s : slots) {
      col_idx.push_back(nb[s]);
      values.push_back(vals[s]);
    }
    row_ptr.push_back(col_idx.size());
  }
  return SparseGraph(m.num_nodes(), std::move(row_ptr), std::move(col_idx), std::move(values));
}

SparseGraph topk_cosine(const FeatureMatrix& x, std::size_t k) {
  const auto n = static_cast<std::size_t>(x.rows());
  DenseMatrix normalized = x;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double norm = x.row(i).norm();
    if (norm > 0.0) normalized.row(i) /= norm;
    else normalized.row(i).setZero();
  }
  std::vector<Triplet> entries;
  Eigen::VectorXd sims(static_cast<Eigen::Index>(n));
  std::vector<NodeId> order(n);
  for (NodeId u = 0; u < n; ++u) {
    sims.noalias() = normalized * normalized.row(u).transpose();
    order.clear();
    for (NodeId v = 0; v < n; ++v)
      if (v != u && sims[v] != 0.0) order.push_back(v);
    const std::size_t keep = std::min(k, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep), order.end(),
                      [&](NodeId a, NodeId b) { return sims[a] != sims[b] ? sims[a] > sims[b] : a < b; });
    for (std::size_t s = 0; s < keep; ++s) entries.push_back({u, order[s], sims[order[s]]});
  }
  return SparseGraph::from_triplets(n, std::move(entries));
}

SemanticGraphSet build_semantic_graphs(const SparseGraph& g, const FeatureMatrix& x,
                                       const std::vector<MotifPattern>& patterns, std::size_t k,
                                       SemanticBuildOptions options) {
  if (patterns.empty()) throw ContractError("build_semantic_graphs: no motif patterns given");
  if (static_cast<std::size_t>(x.rows()) != g.num_nodes())
    throw ContractError("build_semantic_graphs: feature rows do not match graph nodes");
  SemanticGraphSet out;
  out.k = k;
  for (const auto& p : patterns) {
    const InstanceSet instances = enumerate_instances(g, p, {options.workers});
    if (instances.size() == 0)
      std::cerr << "warning: motif '" << p.name << "' has no instances; semantic graph is empty\n";
    const SparseGraph mask = nonzero_mask(cooccurrence(instances, g.num_nodes()));
    out.graphs.push_back(topk_rows(masked_cosine(x, mask), k));
    out.motif_names.push_back(p.name);
    out.instance_counts.push_back(instances.size());
  }
  return out;
}

}  // namespace fsgcl
