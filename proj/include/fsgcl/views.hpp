#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "fsgcl/graph.hpp"
#include "fsgcl/semantic.hpp"

namespace fsgcl {

/// One augmented view: perturbed features plus T+1 structures where index 0
/// is the holistic graph (adjacency or diffusion) and 1..T the semantic graphs.
struct GraphView {
  FeatureMatrix features;
  std::vector<SparseGraph> structures;
};

struct PprOptions {
  /// Largest n solved by a dense LU factorization; above it a truncated
  /// Neumann series is used.
  std::size_t direct_solve_limit = 5000;
  double series_tolerance = 1e-6;
};

/// alpha * (I - (1 - alpha) D^{-1/2} A D^{-1/2})^{-1}.
DenseMatrix ppr_diffusion(const SparseGraph& g, double alpha, PprOptions options = {});

/// Stores the nonzero entries of a dense diffusion matrix; entries with
/// |value| <= threshold are dropped (threshold 0 keeps every nonzero).
SparseGraph sparsify_dense(const DenseMatrix& u, double threshold);

/// Bernoulli(r) element mask with no rescaling; the stream is keyed by
/// (seed, step, view) so any step can be regenerated independently.
FeatureMatrix feature_dropout(const FeatureMatrix& x, double r, std::uint64_t seed,
                              std::uint64_t step = 0, std::uint64_t view = 0);

/// Drops stored entries of `g` with probability r (optional semantic-edge
/// perturbation; off by default in the pipeline).
SparseGraph edge_dropout(const SparseGraph& g, double r, std::uint64_t seed, std::uint64_t step,
                         std::uint64_t view);

struct ViewOptions {
  double alpha = 0.2;
  double drop_rate = 0.2;
  /// Diffusion entries at or below this magnitude are not stored when the
  /// graph exceeds `PprOptions::direct_solve_limit` nodes.
  double sparsify_threshold = 1e-4;
  PprOptions ppr;
};

/// First view: [A, SG_1..SG_T]; second view: [U, SG_1..SG_T]. Each view's
/// features are dropped out with its own sub-seed.
std::pair<GraphView, GraphView> build_views(const SparseGraph& g, const FeatureMatrix& x,
                                            const SemanticGraphSet& sg, const ViewOptions& options,
                                            std::uint64_t seed);

/// Same as build_views but with a precomputed diffusion structure.
std::pair<GraphView, GraphView> build_views(const SparseGraph& g, const SparseGraph& diffusion,
                                            const FeatureMatrix& x,
                                            const std::vector<SparseGraph>& semantic,
                                            double drop_rate, std::uint64_t seed);

/// Binary dense-matrix file: "FSGCLDM1", uint64 rows, uint64 cols, then
/// row-major little-endian float64 values.
void write_dense_binary(const DenseMatrix& m, const std::filesystem::path& path);
DenseMatrix read_dense_binary(const std::filesystem::path& path);

}  // namespace fsgcl
