#include "fsgcl/views.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include <Eigen/LU>

#include "fsgcl/error.hpp"
#include "fsgcl/rng.hpp"

namespace fsgcl {

DenseMatrix ppr_diffusion(const SparseGraph& g, double alpha, PprOptions options) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ContractError("ppr_diffusion: alpha must lie in (0, 1)");
  const auto n = static_cast<Eigen::Index>(g.num_nodes());
  const SparseGraph a_hat = sym_normalized_adjacency(g, false);

  if (g.num_nodes() <= options.direct_solve_limit) {
    DenseMatrix system = DenseMatrix::Identity(n, n);
    for (NodeId u = 0; u < g.num_nodes(); ++u) {
      const auto nb = a_hat.neighbors(u);
      const auto vals = a_hat.row_values(u);
      for (std::size_t k = 0; k < nb.size(); ++k) system(u, nb[k]) -= (1.0 - alpha) * vals[k];
    }
    DenseMatrix rhs = DenseMatrix::Identity(n, n) * alpha;
    return system.partialPivLu().solve(rhs);
  }

  // (1-alpha)^{T+1} < tol  =>  T = ceil(log(tol) / log(1-alpha)) - 1
  const int terms = static_cast<int>(std::ceil(std::log(options.series_tolerance) / std::log(1.0 - alpha)));
  DenseMatrix power = DenseMatrix::Identity(n, n);
  DenseMatrix result = alpha * power;
  DenseMatrix next(n, n);
  double coeff = alpha;
  for (int t = 1; t <= terms; ++t) {
    next.setZero();
    for (NodeId u = 0; u < g.num_nodes(); ++u) {
      const auto nb = a_hat.neighbors(u);
      const auto vals = a_hat.row_values(u);
      for (std::size_t k = 0; k < nb.size(); ++k) next.row(u) += vals[k] * power.row(nb[k]);
    }
    power.swap(next);
    coeff *= (1.0 - alpha);
    result += coeff * power;
  }
  return result;
}

SparseGraph sparsify_dense(const DenseMatrix& u, double threshold) {
  std::vector<std::size_t> row_ptr{0};
  std::vector<NodeId> col_idx;
  std::vector<double> values;
  for (Eigen::Index i = 0; i < u.rows(); ++i) {
    for (Eigen::Index j = 0; j < u.cols(); ++j) {
      const double v = u(i, j);
      if (v == 0.0 || std::abs(v) <= threshold) continue;
      col_idx.push_back(static_cast<NodeId>(j));
      values.push_back(v);
    }
    row_ptr.push_back(col_idx.size());
  }
  return SparseGraph(static_cast<std::size_t>(u.rows()), std::move(row_ptr), std::move(col_idx),
                     std::move(values));
}

FeatureMatrix feature_dropout(const FeatureMatrix& x, double r, std::uint64_t seed,
                              std::uint64_t step, std::uint64_t view) {
  if (!(r >= 0.0 && r < 1.0)) throw ContractError("feature_dropout: rate must lie in [0, 1)");
  FeatureMatrix out = x;
  if (r == 0.0) return out;
  Rng rng(derive_seed(seed, {0xD40u, step, view}));
  double* data = out.data();
  for (Eigen::Index i = 0; i < out.size(); ++i)
    if (uniform01(rng) < r) data[i] = 0.0;
  return out;
}

SparseGraph edge_dropout(const SparseGraph& g, double r, std::uint64_t seed, std::uint64_t step,
                         std::uint64_t view) {
  if (!(r >= 0.0 && r < 1.0)) throw ContractError("edge_dropout: rate must lie in [0, 1)");
  Rng rng(derive_seed(seed, {0xED6Eu, step, view}));
  std::vector<Triplet> kept;
  for (const auto& t : g.to_triplets())
    if (uniform01(rng) >= r) kept.push_back(t);
  return SparseGraph::from_triplets(g.num_nodes(), std::move(kept));
}

std::pair<GraphView, GraphView> build_views(const SparseGraph& g, const SparseGraph& diffusion,
                                            const FeatureMatrix& x,
                                            const std::vector<SparseGraph>& semantic,
                                            double drop_rate, std::uint64_t seed) {
  const std::size_t n = g.num_nodes();
  if (static_cast<std::size_t>(x.rows()) != n || diffusion.num_nodes() != n)
    throw ContractError("build_views: node counts of graph, diffusion and features differ");
  for (const auto& s : semantic)
    if (s.num_nodes() != n) throw ContractError("build_views: semantic graph node count differs");

  GraphView first{feature_dropout(x, drop_rate, seed, 0, 0), {g}};
  GraphView second{feature_dropout(x, drop_rate, seed, 0, 1), {diffusion}};
  for (const auto& s : semantic) {
    first.structures.push_back(s);
    second.structures.push_back(s);
  }
  return {std::move(first), std::move(second)};
}

std::pair<GraphView, GraphView> build_views(const SparseGraph& g, const FeatureMatrix& x,
                                            const SemanticGraphSet& sg, const ViewOptions& options,
                                            std::uint64_t seed) {
  const DenseMatrix u = ppr_diffusion(g, options.alpha, options.ppr);
  const double threshold = g.num_nodes() > options.ppr.direct_solve_limit ? options.sparsify_threshold : 0.0;
  return build_views(g, sparsify_dense(u, threshold), x, sg.graphs, options.drop_rate, seed);
}

namespace {
constexpr char kDenseMagic[8] = {'F', 'S', 'G', 'C', 'L', 'D', 'M', '1'};
}

void write_dense_binary(const DenseMatrix& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  const std::uint64_t dims[2] = {static_cast<std::uint64_t>(m.rows()), static_cast<std::uint64_t>(m.cols())};
  out.write(kDenseMagic, sizeof(kDenseMagic));
  out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
  out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
}

DenseMatrix read_dense_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  char magic[8];
  std::uint64_t dims[2];
  in.read(magic, sizeof(magic));
  in.read(reinterpret_cast<char*>(dims), sizeof(dims));
  if (!in || std::memcmp(magic, kDenseMagic, sizeof(magic)) != 0)
    throw ParseError(path.string(), 0, "not a dense matrix file");
  DenseMatrix m(static_cast<Eigen::Index>(dims[0]), static_cast<Eigen::Index>(dims[1]));
  in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
  if (!in) throw ParseError(path.string(), 0, "truncated dense matrix file");
  return m;
}

}  // namespace fsgcl
