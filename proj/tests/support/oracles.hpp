#pragma once

// Independent reference implementations used by the unit and acceptance
// tests. None of them call into the library code they check.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>
#include <utility>
#include <vector>

#include "fsgcl/graph.hpp"
#include "fsgcl/motif.hpp"

namespace oracle {

using fsgcl::DenseMatrix;
using fsgcl::NodeId;
using fsgcl::SparseGraph;

/// Erdos-Renyi graph, symmetric and binary.
inline SparseGraph random_graph(std::size_t n, double p, std::mt19937_64& rng) {
  std::bernoulli_distribution coin(p);
  std::vector<fsgcl::Triplet> t;
  for (NodeId u = 0; u < n; ++u)
    for (NodeId v = u + 1; v < n; ++v)
      if (coin(rng)) {
        t.push_back({u, v, 1.0});
        t.push_back({v, u, 1.0});
      }
  return SparseGraph::from_triplets(n, t);
}

inline DenseMatrix adjacency(const SparseGraph& g) {
  DenseMatrix a = DenseMatrix::Zero(static_cast<Eigen::Index>(g.num_nodes()), static_cast<Eigen::Index>(g.num_nodes()));
  const auto rp = g.row_ptr();
  const auto ci = g.col_idx();
  const auto val = g.values();
  for (std::size_t u = 0; u < g.num_nodes(); ++u)
    for (std::size_t e = rp[u]; e < rp[u + 1]; ++e) a(static_cast<Eigen::Index>(u), ci[e]) = val[e];
  return a;
}

struct BruteForceMotifs {
  std::vector<std::vector<NodeId>> instances;  // sorted vertex sets, lexicographic
  DenseMatrix cooccurrence;                    // n x n counts
};

/// Every m-subset, every bijection: a subset is an instance if some
/// bijection maps all motif edges onto host edges; the pairs hit by any such
/// bijection each gain one count.
inline BruteForceMotifs brute_force_motifs(const SparseGraph& g, const fsgcl::MotifPattern& p) {
  const std::size_t n = g.num_nodes();
  const auto m = static_cast<std::size_t>(p.num_nodes);
  const DenseMatrix a = adjacency(g);
  BruteForceMotifs out;
  out.cooccurrence = DenseMatrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  if (m > n) return out;

  std::vector<bool> pick(n, false);
  std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(m), true);
  do {
    std::vector<NodeId> subset;
    for (std::size_t i = 0; i < n; ++i)
      if (pick[i]) subset.push_back(static_cast<NodeId>(i));
    std::vector<std::size_t> perm(m);
    std::iota(perm.begin(), perm.end(), 0);
    std::set<std::pair<NodeId, NodeId>> hit;
    bool found = false;
    do {
      bool ok = true;
      for (auto [i, j] : p.edges)
        if (a(subset[perm[static_cast<std::size_t>(i)]], subset[perm[static_cast<std::size_t>(j)]]) == 0.0) {
          ok = false;
          break;
        }
      if (!ok) continue;
      found = true;
      for (auto [i, j] : p.edges) {
        NodeId u = subset[perm[static_cast<std::size_t>(i)]], v = subset[perm[static_cast<std::size_t>(j)]];
        hit.insert({std::min(u, v), std::max(u, v)});
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
    if (found) {
      out.instances.push_back(subset);
      for (auto [u, v] : hit) {
        out.cooccurrence(u, v) += 1.0;
        out.cooccurrence(v, u) += 1.0;
      }
    }
  } while (std::prev_permutation(pick.begin(), pick.end()));
  std::sort(out.instances.begin(), out.instances.end());
  return out;
}

/// Gauss-Jordan inverse with partial pivoting.
inline DenseMatrix gauss_jordan_inverse(DenseMatrix a) {
  const Eigen::Index n = a.rows();
  DenseMatrix inv = DenseMatrix::Identity(n, n);
  for (Eigen::Index c = 0; c < n; ++c) {
    Eigen::Index pivot = c;
    for (Eigen::Index r = c + 1; r < n; ++r)
      if (std::abs(a(r, c)) > std::abs(a(pivot, c))) pivot = r;
    if (a(pivot, c) == 0.0) throw std::runtime_error("singular matrix");
    a.row(c).swap(a.row(pivot));
    inv.row(c).swap(inv.row(pivot));
    const double d = a(c, c);
    a.row(c) /= d;
    inv.row(c) /= d;
    for (Eigen::Index r = 0; r < n; ++r) {
      if (r == c || a(r, c) == 0.0) continue;
      const double f = a(r, c);
      a.row(r) -= f * a.row(c);
      inv.row(r) -= f * inv.row(c);
    }
  }
  return inv;
}

/// D^{-1/2} A D^{-1/2} on a dense matrix; zero-degree rows stay zero.
inline DenseMatrix sym_normalize(const DenseMatrix& a) {
  DenseMatrix out = a;
  const Eigen::Index n = a.rows();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const double di = a.row(i).sum(), dj = a.col(j).sum();
      out(i, j) = (di > 0 && dj > 0) ? a(i, j) / std::sqrt(di * dj) : 0.0;
    }
  return out;
}

inline DenseMatrix ppr_inverse(const SparseGraph& g, double alpha) {
  const DenseMatrix a_hat = sym_normalize(adjacency(g));
  const DenseMatrix m = DenseMatrix::Identity(a_hat.rows(), a_hat.cols()) - (1.0 - alpha) * a_hat;
  return alpha * gauss_jordan_inverse(m);
}

inline DenseMatrix prelu(const DenseMatrix& x, double slope) {
  return x.unaryExpr([slope](double v) { return v >= 0 ? v : slope * v; });
}

/// PReLU((D+I)^{-1/2}(A+I)(D+I)^{-1/2} H W) per layer, all dense.
inline DenseMatrix gcn(const SparseGraph& g, const DenseMatrix& x, const std::vector<DenseMatrix>& weights,
                       const std::vector<double>& slopes) {
  DenseMatrix a = adjacency(g);
  a += DenseMatrix::Identity(a.rows(), a.cols());
  const DenseMatrix a_hat = sym_normalize(a);
  DenseMatrix h = x;
  for (std::size_t l = 0; l < weights.size(); ++l) h = prelu(a_hat * (h * weights[l]), slopes[l]);
  return h;
}

/// Mean negative row cosine with the 1e-12 norm floor.
inline double cosine_loss(const DenseMatrix& p, const DenseMatrix& q) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    const double np = std::max(p.row(i).norm(), 1e-12), nq = std::max(q.row(i).norm(), 1e-12);
    total += p.row(i).dot(q.row(i)) / (np * nq);
  }
  return -total / static_cast<double>(p.rows());
}

/// Central differences of f at x with step h. While the one-sided slopes of
/// a probe disagree (curvature, or a kink such as a PReLU switching sides
/// inside the probe interval) the step for that entry shrinks tenfold, down
/// to h / 1000.
inline DenseMatrix numeric_gradient(const std::function<double(const DenseMatrix&)>& f, const DenseMatrix& x,
                                    double h = 1e-5) {
  DenseMatrix g(x.rows(), x.cols());
  DenseMatrix probe = x;
  const double center = f(x);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double orig = probe.data()[i];
    double step = h;
    for (int refine = 0; refine < 4; ++refine, step /= 10.0) {
      probe.data()[i] = orig + step;
      const double up = f(probe);
      probe.data()[i] = orig - step;
      const double down = f(probe);
      g.data()[i] = (up - down) / (2.0 * step);
      const double forward = (up - center) / step, backward = (center - down) / step;
      if (std::abs(forward - backward) <= 1e-6 * std::max(1.0, std::abs(g.data()[i]))) break;
    }
    probe.data()[i] = orig;
  }
  return g;
}

/// ||a - b|| / max(||a||, ||b||, 1e-6). The floor sits well above central
/// difference rounding noise (~eps * |f| / h ~ 1e-11), so a gradient that is
/// exactly zero does not read as a 100% error against that noise.
inline double relative_error(const DenseMatrix& a, const DenseMatrix& b) {
  const double scale = std::max({a.norm(), b.norm(), 1e-6});
  return (a - b).norm() / scale;
}

inline DenseMatrix random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  DenseMatrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = nd(rng);
  return m;
}

}  // namespace oracle
