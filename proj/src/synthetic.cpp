#include "fsgcl/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <unordered_set>

#include "fsgcl/error.hpp"
#include "fsgcl/rng.hpp"

namespace fsgcl {

void SynthConfig::validate() const {
  if (n == 0) throw ConfigError("synthetic: n must be positive");
  if (num_communities == 0) throw ConfigError("synthetic: num_communities must be positive");
  if (minc == 0 || minc > maxc) throw ConfigError("synthetic: need 1 <= minc <= maxc");
  if (overlap_nodes > n) throw ConfigError("synthetic: overlap_nodes exceeds n");
  if (memberships == 0 || memberships > num_communities)
    throw ConfigError("synthetic: memberships must lie in [1, num_communities]");
  if (!(mu >= 0.0 && mu <= 1.0)) throw ConfigError("synthetic: mu must lie in [0, 1]");
  if (!(avg_degree >= 1.0) || static_cast<double>(max_degree) <= avg_degree)
    throw ConfigError("synthetic: need 1 <= avg_degree < max_degree");
  if (max_degree >= n) throw ConfigError("synthetic: max_degree must be below n");
  if (!(degree_exponent > 1.0)) throw ConfigError("synthetic: degree_exponent must exceed 1");
  if (!(feature_noise >= 0.0)) throw ConfigError("synthetic: feature_noise must be non-negative");
  const std::size_t slots = n + overlap_nodes * (memberships - 1);
  if (num_communities * minc > slots || num_communities * maxc < slots)
    throw ConfigError("synthetic: " + std::to_string(num_communities) + " communities sized in [" +
                      std::to_string(minc) + ", " + std::to_string(maxc) + "] cannot hold " + std::to_string(slots) +
                      " memberships");
}

namespace {

std::vector<std::size_t> community_sizes(const SynthConfig& cfg, Rng& rng) {
  const std::size_t target = cfg.n + cfg.overlap_nodes * (cfg.memberships - 1);
  std::vector<std::size_t> sizes(cfg.num_communities);
  for (auto& s : sizes) s = cfg.minc + uniform_index(rng, cfg.maxc - cfg.minc + 1);
  std::size_t total = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
  while (total != target) {
    const auto c = uniform_index(rng, sizes.size());
    if (total < target && sizes[c] < cfg.maxc) {
      ++sizes[c];
      ++total;
    } else if (total > target && sizes[c] > cfg.minc) {
      --sizes[c];
      --total;
    }
  }
  return sizes;
}

// Community lists per node, or nothing when the capacities ran out.
std::optional<std::vector<std::vector<int>>> assign_memberships(const SynthConfig& cfg,
                                                                const std::vector<std::size_t>& sizes, Rng& rng) {
  std::vector<NodeId> order(cfg.n);
  std::iota(order.begin(), order.end(), 0);
  portable_shuffle(order.begin(), order.end(), rng);

  std::vector<std::size_t> capacity = sizes;
  std::vector<std::vector<int>> member(cfg.n);
  for (std::size_t i = 0; i < cfg.overlap_nodes; ++i) {
    auto& chosen = member[order[i]];
    for (std::size_t m = 0; m < cfg.memberships; ++m) {
      std::size_t total = 0;
      for (std::size_t c = 0; c < capacity.size(); ++c)
        if (std::find(chosen.begin(), chosen.end(), static_cast<int>(c)) == chosen.end()) total += capacity[c];
      if (total == 0) return std::nullopt;
      auto r = uniform_index(rng, total);
      for (std::size_t c = 0; c < capacity.size(); ++c) {
        if (std::find(chosen.begin(), chosen.end(), static_cast<int>(c)) != chosen.end()) continue;
        if (r < capacity[c]) {
          chosen.push_back(static_cast<int>(c));
          --capacity[c];
          break;
        }
        r -= capacity[c];
      }
    }
    std::sort(chosen.begin(), chosen.end());
  }
  std::vector<int> slots;
  for (std::size_t c = 0; c < capacity.size(); ++c) slots.insert(slots.end(), capacity[c], static_cast<int>(c));
  portable_shuffle(slots.begin(), slots.end(), rng);
  for (std::size_t i = cfg.overlap_nodes; i < cfg.n; ++i) member[order[i]] = {slots[i - cfg.overlap_nodes]};
  return member;
}

// Truncated continuous power law on [lo, hi), floored to integers.
struct DegreeLaw {
  double lo, hi, exponent;

  double cdf_term(double x) const { return std::pow(x, 1.0 - exponent); }

  double mean() const {
    const double a = cdf_term(lo), b = cdf_term(hi);
    double m = 0.0;
    for (double d = std::floor(lo); d < hi; d += 1.0) {
      const double p = (cdf_term(std::max(d, lo)) - cdf_term(std::min(d + 1.0, hi))) / (a - b);
      m += p * d;
    }
    return m;
  }

  std::size_t sample(Rng& rng) const {
    const double a = cdf_term(lo), b = cdf_term(hi);
    const double x = std::pow(a + uniform01(rng) * (b - a), 1.0 / (1.0 - exponent));
    return static_cast<std::size_t>(std::min(std::floor(x), hi - 1.0));
  }
};

DegreeLaw fit_degree_law(const SynthConfig& cfg) {
  DegreeLaw law{1.0, static_cast<double>(cfg.max_degree) + 1.0, cfg.degree_exponent};
  double lo = 1.0, hi = static_cast<double>(cfg.max_degree);
  for (int it = 0; it < 100; ++it) {
    law.lo = 0.5 * (lo + hi);
    (law.mean() < cfg.avg_degree ? lo : hi) = law.lo;
  }
  law.lo = 0.5 * (lo + hi);
  return law;
}

class EdgeSet {
 public:
  explicit EdgeSet(std::size_t n) : n_(n) {}

  bool insert(NodeId u, NodeId v) {
    if (u == v) return false;
    if (u > v) std::swap(u, v);
    if (!keys_.insert(static_cast<std::uint64_t>(u) * n_ + v).second) return false;
    edges_.push_back({u, v});
    return true;
  }

  const std::vector<std::pair<NodeId, NodeId>>& edges() const { return edges_; }

 private:
  std::size_t n_;
  std::unordered_set<std::uint64_t> keys_;
  std::vector<std::pair<NodeId, NodeId>> edges_;
};

bool share_community(const std::vector<int>& a, const std::vector<int>& b) {
  for (int c : a)
    if (std::find(b.begin(), b.end(), c) != b.end()) return true;
  return false;
}

// Pairs shuffled stubs; rejected stubs are reshuffled for a few rounds.
template <typename Accept>
void match_stubs(std::vector<NodeId> stubs, EdgeSet& edges, Rng& rng, Accept accept) {
  for (int round = 0; round < 10 && stubs.size() >= 2; ++round) {
    portable_shuffle(stubs.begin(), stubs.end(), rng);
    std::vector<NodeId> rejected;
    for (std::size_t i = 0; i + 1 < stubs.size(); i += 2) {
      const NodeId u = stubs[i], v = stubs[i + 1];
      if (!(u != v && accept(u, v) && edges.insert(u, v))) {
        rejected.push_back(u);
        rejected.push_back(v);
      }
    }
    stubs = std::move(rejected);
  }
}

}  // namespace

SynthData generate(const SynthConfig& cfg) {
  cfg.validate();
  for (std::size_t attempt = 0; attempt < cfg.max_retries; ++attempt) {
    Rng rng(derive_seed(cfg.seed, {0x5E7u, attempt}));
    const auto sizes = community_sizes(cfg, rng);
    auto member = assign_memberships(cfg, sizes, rng);
    if (!member) continue;

    const DegreeLaw law = fit_degree_law(cfg);
    std::vector<std::vector<NodeId>> internal(cfg.num_communities);
    std::vector<NodeId> external;
    for (NodeId u = 0; u < cfg.n; ++u) {
      const std::size_t degree = law.sample(rng);
      const auto inside = static_cast<std::size_t>(std::lround((1.0 - cfg.mu) * static_cast<double>(degree)));
      external.insert(external.end(), degree - inside, u);
      auto& comms = (*member)[u];
      std::vector<int> order = comms;
      portable_shuffle(order.begin(), order.end(), rng);
      for (std::size_t j = 0; j < order.size(); ++j) {
        const std::size_t share = inside / order.size() + (j < inside % order.size() ? 1 : 0);
        internal[static_cast<std::size_t>(order[j])].insert(internal[static_cast<std::size_t>(order[j])].end(), share,
                                                           u);
      }
    }

    EdgeSet edges(cfg.n);
    for (auto& stubs : internal) match_stubs(std::move(stubs), edges, rng, [](NodeId, NodeId) { return true; });
    match_stubs(std::move(external), edges, rng,
                [&](NodeId u, NodeId v) { return !share_community((*member)[u], (*member)[v]); });

    std::vector<Triplet> triplets;
    triplets.reserve(2 * edges.edges().size());
    for (auto [u, v] : edges.edges()) {
      triplets.push_back({u, v, 1.0});
      triplets.push_back({v, u, 1.0});
    }

    const auto c = static_cast<Eigen::Index>(cfg.num_communities);
    FeatureMatrix x = FeatureMatrix::Zero(static_cast<Eigen::Index>(cfg.n), c + static_cast<Eigen::Index>(cfg.noise_dim));
    for (NodeId u = 0; u < cfg.n; ++u) {
      for (int k : (*member)[u]) x(u, k) = 1.0;
      for (Eigen::Index j = 0; j < c; ++j) x(u, j) += cfg.feature_noise * standard_normal(rng);
      for (Eigen::Index j = c; j < x.cols(); ++j) x(u, j) = standard_normal(rng);
    }

    SynthData out{SparseGraph::from_triplets(cfg.n, triplets), std::move(x),
                  LabelSet{std::move(*member), static_cast<int>(cfg.num_communities)}, sizes};
    return out;
  }
  throw ConfigError("synthetic: could not realize the community memberships after " +
                    std::to_string(cfg.max_retries) + " attempts");
}

double inter_community_fraction(const SparseGraph& g, const LabelSet& labels) {
  std::size_t total = 0, inter = 0;
  for (NodeId u = 0; u < g.num_nodes(); ++u)
    for (NodeId v : g.neighbors(u))
      if (u < v) {
        ++total;
        inter += !share_community(labels.labels[u], labels.labels[v]);
      }
  return total ? static_cast<double>(inter) / static_cast<double>(total) : 0.0;
}

}  // namespace fsgcl
