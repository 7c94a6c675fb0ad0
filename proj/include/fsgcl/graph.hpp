#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace fsgcl {

using NodeId = std::uint32_t;

/// Row-major dense matrix used for features, embeddings and all training math.
using DenseMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Node features, one row per node. Loaders guarantee finite values.
using FeatureMatrix = DenseMatrix;

struct Triplet {
  NodeId row;
  NodeId col;
  double value;
};

/// Compressed sparse row matrix over `n` nodes.
///
/// Column indices are strictly increasing within each row. Graphs read from
/// disk are symmetric; derived matrices (semantic graphs, top-k selections)
/// may be asymmetric, which `is_symmetric()` reports.
class SparseGraph {
 public:
  SparseGraph() = default;
  explicit SparseGraph(std::size_t n);
  /// Validates the CSR invariants and throws ContractError on violation.
  SparseGraph(std::size_t n, std::vector<std::size_t> row_ptr, std::vector<NodeId> col_idx,
              std::vector<double> values);

  enum class Duplicates { kKeepFirst, kSum };

  /// Builds a CSR matrix from unordered triplets. Self-loops are kept.
  static SparseGraph from_triplets(std::size_t n, std::vector<Triplet> triplets,
                                   Duplicates policy = Duplicates::kKeepFirst);

  std::size_t num_nodes() const noexcept { return n_; }
  std::size_t nnz() const noexcept { return col_idx_.size(); }

  std::span<const std::size_t> row_ptr() const noexcept { return row_ptr_; }
  std::span<const NodeId> col_idx() const noexcept { return col_idx_; }
  std::span<const double> values() const noexcept { return values_; }

  std::span<const NodeId> neighbors(NodeId u) const noexcept {
    return {col_idx_.data() + row_ptr_[u], row_ptr_[u + 1] - row_ptr_[u]};
  }
  std::span<const double> row_values(NodeId u) const noexcept {
    return {values_.data() + row_ptr_[u], row_ptr_[u + 1] - row_ptr_[u]};
  }
  std::size_t degree(NodeId u) const noexcept { return row_ptr_[u + 1] - row_ptr_[u]; }

  bool has_edge(NodeId u, NodeId v) const noexcept;
  /// Stored value at (u, v), or 0 when absent.
  double weight(NodeId u, NodeId v) const noexcept;

  bool is_symmetric(double tol = 0.0) const;
  std::vector<Triplet> to_triplets() const;
  DenseMatrix to_dense() const;

  bool operator==(const SparseGraph&) const = default;

 private:
  std::size_t n_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<NodeId> col_idx_;
  std::vector<double> values_;
};

/// Per-node label lists. Single-label datasets have exactly one entry per node.
struct LabelSet {
  std::vector<std::vector<int>> labels;
  int num_classes = 0;

  std::size_t size() const noexcept { return labels.size(); }
  bool is_multilabel() const;
  /// First label of each node; throws ContractError for unlabeled nodes.
  std::vector<int> primary() const;
};

struct EdgeListOptions {
  bool symmetrize = true;
  bool drop_self_loops = true;
};

/// Reads whitespace-separated "src dst [weight]" lines with 0-based ids.
/// Blank lines and lines starting with '#' are ignored.
SparseGraph load_edge_list(const std::filesystem::path& path, std::size_t n,
                           EdgeListOptions options = {});
/// Writes one line per stored entry; symmetric graphs are written once per
/// undirected edge (u < v) when `undirected` is set.
void write_edge_list(const SparseGraph& g, const std::filesystem::path& path,
                     bool undirected = true, bool with_weights = true);

/// Comma-separated numeric matrix; rejects ragged rows and non-finite cells.
FeatureMatrix load_features(const std::filesystem::path& path);
void write_matrix_csv(const DenseMatrix& m, const std::filesystem::path& path);

/// One line per node holding comma-separated integer labels.
LabelSet load_labels(const std::filesystem::path& path);
void write_labels(const LabelSet& labels, const std::filesystem::path& path);

/// D^{-1/2} (A [+ I]) D^{-1/2}. For asymmetric input the row degree scales
/// the left and the column degree the right; non-positive degrees map to 0.
SparseGraph sym_normalized_adjacency(const SparseGraph& g, bool add_self_loops);

/// Shortest round-trip decimal representation of a double.
std::string format_double(double v);

}  // namespace fsgcl
