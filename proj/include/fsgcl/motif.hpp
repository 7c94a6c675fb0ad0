#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fsgcl/graph.hpp"

namespace fsgcl {

/// Small connected undirected template graph.
struct MotifPattern {
  std::string name;
  int num_nodes = 0;
  std::vector<std::pair<int, int>> edges;

  /// Throws ContractError unless the pattern is connected, simple and has
  /// between 2 and kMaxMotifNodes nodes.
  void validate() const;

  static MotifPattern triangle();
  static MotifPattern clique4();
  static MotifPattern cycle4();
  /// Looks up one of the built-in names: triangle, clique4, cycle4.
  static MotifPattern builtin(const std::string& name);
};

inline constexpr int kMaxMotifNodes = 8;

/// Matched vertex sets of one motif.
///
/// Instance k occupies nodes[k*m .. k*m+m) in increasing node order.
/// edge_masks[k] marks which node pairs of that sorted tuple are the image
/// of some motif edge under some bijection; bit index is pair_index(i, j).
struct InstanceSet {
  MotifPattern motif;
  std::vector<NodeId> nodes;
  std::vector<std::uint64_t> edge_masks;

  std::size_t size() const noexcept { return edge_masks.size(); }
  std::span<const NodeId> instance(std::size_t k) const {
    const auto m = static_cast<std::size_t>(motif.num_nodes);
    return {nodes.data() + k * m, m};
  }
  /// Bit position of the unordered pair (i, j), i != j, of tuple positions.
  static int pair_index(int i, int j, int m);
};

struct EnumerateOptions {
  /// Worker threads fanning out over root vertices; 0 = hardware concurrency.
  unsigned workers = 1;
};

/// Non-induced matching: every motif edge must map onto a host edge, extra
/// host edges among the matched nodes are allowed. Each vertex set is
/// emitted once, in lexicographic order, independent of the worker count.
InstanceSet enumerate_instances(const SparseGraph& g, const MotifPattern& p,
                                EnumerateOptions options = {});

/// Symmetric count matrix: O[u,v] is the number of instances whose matched
/// edge set contains {u, v}.
SparseGraph cooccurrence(const InstanceSet& s, std::size_t num_nodes);

/// Binary support of `o`.
SparseGraph nonzero_mask(const SparseGraph& o);

/// Writes "u0,u1,...,um-1" per instance.
void write_instances_csv(const InstanceSet& s, const std::filesystem::path& path);

/// Automorphisms of a pattern as permutations of its node indices.
std::vector<std::vector<int>> automorphisms(const MotifPattern& p);

}  // namespace fsgcl
