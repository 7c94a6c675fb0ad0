#include "fsgcl/motif.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <numeric>
#include <thread>

#include "fsgcl/error.hpp"

namespace fsgcl {

void MotifPattern::validate() const {
  if (num_nodes < 2 || num_nodes > kMaxMotifNodes)
    throw ContractError("motif '" + name + "' must have between 2 and " +
                        std::to_string(kMaxMotifNodes) + " nodes");
  std::vector<std::vector<bool>> adj(num_nodes, std::vector<bool>(num_nodes, false));
  for (auto [a, b] : edges) {
    if (a < 0 || b < 0 || a >= num_nodes || b >= num_nodes)
      throw ContractError("motif '" + name + "' edge endpoint out of range");
    if (a == b) throw ContractError("motif '" + name + "' has a self-loop");
    if (adj[a][b]) throw ContractError("motif '" + name + "' has a duplicate edge");
    adj[a][b] = adj[b][a] = true;
  }
  std::vector<bool> seen(num_nodes, false);
  std::vector<int> stack{0};
  seen[0] = true;
  int reached = 1;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    for (int v = 0; v < num_nodes; ++v)
      if (adj[u][v] && !seen[v]) {
        seen[v] = true;
        ++reached;
        stack.push_back(v);
      }
  }
  if (reached != num_nodes) throw ContractError("motif '" + name + "' is not connected");
}

MotifPattern MotifPattern::triangle() { return {"triangle", 3, {{0, 1}, {1, 2}, {0, 2}}}; }

MotifPattern MotifPattern::clique4() {
  return {"clique4", 4, {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};
}

MotifPattern MotifPattern::cycle4() { return {"cycle4", 4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}}}; }

MotifPattern MotifPattern::builtin(const std::string& name) {
  if (name == "triangle") return triangle();
  if (name == "clique4") return clique4();
  if (name == "cycle4") return cycle4();
  throw ConfigError("unknown built-in motif '" + name + "'");
}

int InstanceSet::pair_index(int i, int j, int m) {
  if (i > j) std::swap(i, j);
  return i * m - i * (i + 1) / 2 + (j - i - 1);
}

std::vector<std::vector<int>> automorphisms(const MotifPattern& p) {
  const int m = p.num_nodes;
  std::vector<std::vector<bool>> adj(m, std::vector<bool>(m, false));
  for (auto [a, b] : p.edges) adj[a][b] = adj[b][a] = true;
  std::vector<int> perm(m);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::vector<int>> out;
  do {
    bool ok = true;
    for (auto [a, b] : p.edges)
      if (!adj[perm[a]][perm[b]]) {
        ok = false;
        break;
      }
    if (ok) out.push_back(perm);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

namespace {

struct Condition {
  int less;
  int greater;
};

// Orbit-stabilizer symmetry breaking: after these constraints exactly one
// embedding per automorphism class of the image survives.
std::vector<Condition> symmetry_conditions(const MotifPattern& p) {
  auto perms = automorphisms(p);
  std::vector<Condition> conds;
  while (perms.size() > 1) {
    for (int v = 0; v < p.num_nodes; ++v) {
      std::vector<int> orbit;
      for (const auto& perm : perms) orbit.push_back(perm[v]);
      std::sort(orbit.begin(), orbit.end());
      orbit.erase(std::unique(orbit.begin(), orbit.end()), orbit.end());
      if (orbit.size() < 2) continue;
      for (int u : orbit)
        if (u != v) conds.push_back({v, u});
      std::erase_if(perms, [v](const std::vector<int>& perm) { return perm[v] != v; });
      break;
    }
  }
  return conds;
}

struct MatchPlan {
  std::vector<int> order;                      // pattern node at each depth
  std::vector<int> parent;                     // depth of an earlier adjacent node
  std::vector<std::vector<int>> back_edges;    // earlier depths that must be adjacent
  std::vector<std::vector<std::pair<int, bool>>> checks;  // (earlier depth, mine must be greater)
};

MatchPlan make_plan(const MotifPattern& p, int start, const std::vector<Condition>& conds) {
  const int m = p.num_nodes;
  std::vector<std::vector<bool>> adj(m, std::vector<bool>(m, false));
  for (auto [a, b] : p.edges) adj[a][b] = adj[b][a] = true;

  MatchPlan plan;
  std::vector<int> depth_of(m, -1);
  plan.order.push_back(start);
  depth_of[start] = 0;
  // Greedy order: next node is the one with most already-placed neighbors.
  while (static_cast<int>(plan.order.size()) < m) {
    int best = -1, best_links = -1;
    for (int v = 0; v < m; ++v) {
      if (depth_of[v] >= 0) continue;
      int links = 0;
      for (int u : plan.order) links += adj[u][v];
      if (links > best_links && links > 0) {
        best = v;
        best_links = links;
      }
    }
    depth_of[best] = static_cast<int>(plan.order.size());
    plan.order.push_back(best);
  }
  plan.parent.assign(m, -1);
  plan.back_edges.resize(m);
  plan.checks.resize(m);
  for (int d = 1; d < m; ++d) {
    const int v = plan.order[d];
    for (int e = 0; e < d; ++e)
      if (adj[plan.order[e]][v]) {
        if (plan.parent[d] < 0) plan.parent[d] = e;
        else plan.back_edges[d].push_back(e);
      }
  }
  for (const auto& c : conds) {
    const int dl = depth_of[c.less], dg = depth_of[c.greater];
    if (dl < dg) plan.checks[dg].push_back({dl, true});
    else plan.checks[dl].push_back({dg, false});
  }
  return plan;
}

struct Match {
  std::vector<NodeId> nodes;
  std::uint64_t mask;
};

class RootMatcher {
 public:
  RootMatcher(const SparseGraph& g, const MotifPattern& p, const std::vector<MatchPlan>& plans)
      : g_(g), p_(p), plans_(plans), m_(p.num_nodes), pattern_degree_(m_, 0) {
    for (auto [a, b] : p.edges) {
      ++pattern_degree_[a];
      ++pattern_degree_[b];
    }
    mapped_.resize(m_);
  }

  std::vector<Match> run(NodeId root) {
    found_.clear();
    for (const auto& plan : plans_) {
      if (g_.degree(root) < static_cast<std::size_t>(pattern_degree_[plan.order[0]])) continue;
      plan_ = &plan;
      mapped_[0] = root;
      extend(1, root);
    }
    std::sort(found_.begin(), found_.end(),
              [](const Match& a, const Match& b) { return a.nodes < b.nodes; });
    std::vector<Match> merged;
    for (auto& f : found_) {
      if (!merged.empty() && merged.back().nodes == f.nodes) merged.back().mask |= f.mask;
      else merged.push_back(std::move(f));
    }
    return merged;
  }

 private:
  void extend(int depth, NodeId root) {
    const auto& plan = *plan_;
    if (depth == m_) {
      record();
      return;
    }
    const int pattern_node = plan.order[depth];
    const auto need = static_cast<std::size_t>(pattern_degree_[pattern_node]);
    for (NodeId c : g_.neighbors(mapped_[plan.parent[depth]])) {
      if (c <= root) continue;
      if (g_.degree(c) < need) continue;
      if (std::find(mapped_.begin(), mapped_.begin() + depth, c) != mapped_.begin() + depth) continue;
      bool ok = true;
      for (int e : plan.back_edges[depth])
        if (!g_.has_edge(mapped_[e], c)) {
          ok = false;
          break;
        }
      if (!ok) continue;
      for (auto [e, greater] : plan.checks[depth])
        if ((mapped_[e] < c) != greater) {
          ok = false;
          break;
        }
      if (!ok) continue;
      mapped_[depth] = c;
      extend(depth + 1, root);
    }
  }

  void record() {
    const auto& plan = *plan_;
    // image[pattern node] = host node
    std::vector<NodeId> image(m_);
    for (int d = 0; d < m_; ++d) image[plan.order[d]] = mapped_[d];
    Match match{image, 0};
    std::sort(match.nodes.begin(), match.nodes.end());
    auto pos = [&](NodeId v) {
      return static_cast<int>(std::lower_bound(match.nodes.begin(), match.nodes.end(), v) -
                              match.nodes.begin());
    };
    for (auto [a, b] : p_.edges)
      match.mask |= std::uint64_t{1} << InstanceSet::pair_index(pos(image[a]), pos(image[b]), m_);
    found_.push_back(std::move(match));
  }

  const SparseGraph& g_;
  const MotifPattern& p_;
  const std::vector<MatchPlan>& plans_;
  const MatchPlan* plan_ = nullptr;
  int m_;
  std::vector<int> pattern_degree_;
  std::vector<NodeId> mapped_;
  std::vector<Match> found_;
};

}  // namespace

InstanceSet enumerate_instances(const SparseGraph& g, const MotifPattern& p,
                                EnumerateOptions options) {
  p.validate();
  InstanceSet out{p, {}, {}};
  const std::size_t n = g.num_nodes();
  if (static_cast<std::size_t>(p.num_nodes) > n) return out;

  const auto conds = symmetry_conditions(p);
  std::vector<MatchPlan> plans;
  for (int s = 0; s < p.num_nodes; ++s) plans.push_back(make_plan(p, s, conds));

  // Every instance is found exactly once, from its smallest node.
  std::vector<std::vector<Match>> per_root(n);
  unsigned workers = options.workers ? options.workers : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    RootMatcher matcher(g, p, plans);
    for (std::size_t r; (r = next.fetch_add(1)) < n;)
      per_root[r] = matcher.run(static_cast<NodeId>(r));
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }

  std::size_t total = 0;
  for (const auto& r : per_root) total += r.size();
  out.nodes.reserve(total * static_cast<std::size_t>(p.num_nodes));
  out.edge_masks.reserve(total);
  for (auto& r : per_root)
    for (auto& match : r) {
      out.nodes.insert(out.nodes.end(), match.nodes.begin(), match.nodes.end());
      out.edge_masks.push_back(match.mask);
    }
  return out;
}

SparseGraph cooccurrence(const InstanceSet& s, std::size_t num_nodes) {
  const int m = s.motif.num_nodes;
  std::vector<Triplet> counts;
  for (std::size_t k = 0; k < s.size(); ++k) {
    const auto inst = s.instance(k);
    for (int i = 0; i < m; ++i)
      for (int j = i + 1; j < m; ++j) {
        if (!(s.edge_masks[k] >> InstanceSet::pair_index(i, j, m) & 1)) continue;
        counts.push_back({inst[i], inst[j], 1.0});
        counts.push_back({inst[j], inst[i], 1.0});
      }
  }
  return SparseGraph::from_triplets(num_nodes, std::move(counts), SparseGraph::Duplicates::kSum);
}

SparseGraph nonzero_mask(const SparseGraph& o) {
  std::vector<Triplet> entries;
  for (const auto& t : o.to_triplets())
    if (t.value != 0.0) entries.push_back({t.row, t.col, 1.0});
  return SparseGraph::from_triplets(o.num_nodes(), std::move(entries));
}

void write_instances_csv(const InstanceSet& s, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  for (std::size_t k = 0; k < s.size(); ++k) {
    const auto inst = s.instance(k);
    for (std::size_t i = 0; i < inst.size(); ++i) out << (i ? "," : "") << inst[i];
    out << '\n';
  }
}

}  // namespace fsgcl
