#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "fsgcl/graph.hpp"

namespace fsgcl {

struct Split {
  std::vector<NodeId> train;
  std::vector<NodeId> val;
  std::vector<NodeId> test;
};

/// Shuffled partition; train and validation get floor(n * fraction) nodes,
/// test the remainder. Requires n >= 10.
Split make_splits(std::size_t n, std::uint64_t seed, double train_fraction = 0.1, double val_fraction = 0.1);

/// 2^-10, 2^-9, ..., 2^10.
std::vector<double> default_strength_grid();

struct LogisticOptions {
  double learning_rate = 0.1;
  std::size_t max_iterations = 500;
  double tolerance = 1e-6;
};

struct LogisticResult {
  double test_accuracy = 0.0;
  double val_accuracy = 0.0;
  /// Inverse regularization strength picked on the validation nodes.
  double strength = 0.0;
};

/// Multinomial L2-regularized logistic regression on frozen embeddings.
/// Objective: mean cross-entropy + ||W||^2 / (2 * C * n_train), bias not
/// penalized, features standardized with training statistics.
LogisticResult logistic_eval(const DenseMatrix& z, const std::vector<int>& labels, const Split& split,
                             const std::vector<double>& strengths = default_strength_grid(),
                             LogisticOptions options = {});

struct RepeatedAccuracy {
  double mean = 0.0;
  double std = 0.0;
  std::vector<double> runs;
};

/// logistic_eval over `repeats` random 10/10/80 splits.
RepeatedAccuracy logistic_eval_repeated(const DenseMatrix& z, const std::vector<int>& labels,
                                        std::size_t repeats = 5, std::uint64_t seed = 0);

/// C x C matrix over community pairs; NaN marks pairs no test node carries.
using HeatmapMatrix = DenseMatrix;

enum class HeatmapScore {
  kExactSet,      // predicted label set equals the true set
  kLabelRecall,   // fraction of the true labels that were predicted
};

struct MlknnOptions {
  std::size_t k = 10;
  double smoothing = 1.0;
  HeatmapScore score = HeatmapScore::kExactSet;
};

struct MlknnResult {
  /// Predicted label set per test node (same order as split.test).
  std::vector<std::vector<int>> predicted;
  HeatmapMatrix heatmap;
  /// Fraction of test nodes whose label set is recovered exactly.
  double exact_match = 0.0;
};

/// Multilabel k-nearest-neighbor classifier (Euclidean distance, Bayesian
/// posterior per label from neighbor label counts) fitted on split.train and
/// scored on split.test.
MlknnResult mlknn_eval(const DenseMatrix& z, const LabelSet& labels, const Split& split, MlknnOptions options = {});

/// Mean over populated cells (i < j) of the heatmap.
double mean_off_diagonal(const HeatmapMatrix& h);
double mean_diagonal(const HeatmapMatrix& h);

/// Writes the heatmap with empty cells for absent pairs.
void write_heatmap_csv(const HeatmapMatrix& h, const std::filesystem::path& path);

}  // namespace fsgcl
