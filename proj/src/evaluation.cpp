#include "fsgcl/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <thread>

#include "fsgcl/error.hpp"
#include "fsgcl/rng.hpp"

namespace fsgcl {

Split make_splits(std::size_t n, std::uint64_t seed, double train_fraction, double val_fraction) {
  if (n < 10) throw ContractError("make_splits: need at least 10 nodes");
  if (train_fraction <= 0.0 || val_fraction < 0.0 || train_fraction + val_fraction >= 1.0)
    throw ContractError("make_splits: invalid split fractions");
  std::vector<NodeId> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, {0x5B117u}));
  portable_shuffle(order.begin(), order.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::floor(static_cast<double>(n) * train_fraction + 1e-9));
  const auto n_val = static_cast<std::size_t>(std::floor(static_cast<double>(n) * val_fraction + 1e-9));
  Split s;
  s.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.val.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
               order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  s.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), order.end());
  return s;
}

std::vector<double> default_strength_grid() {
  std::vector<double> grid;
  for (int e = -10; e <= 10; ++e) grid.push_back(std::ldexp(1.0, e));
  return grid;
}

namespace {

DenseMatrix gather_rows(const DenseMatrix& z, const std::vector<NodeId>& idx) {
  DenseMatrix out(static_cast<Eigen::Index>(idx.size()), z.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = z.row(idx[i]);
  return out;
}

struct Standardizer {
  Eigen::RowVectorXd mean, scale;

  explicit Standardizer(const DenseMatrix& train) {
    mean = train.colwise().mean();
    const DenseMatrix centered = train.rowwise() - mean;
    scale = (centered.array().square().colwise().sum() / static_cast<double>(train.rows())).sqrt();
    for (Eigen::Index j = 0; j < scale.size(); ++j)
      if (!(scale[j] > 1e-12)) scale[j] = 1.0;
  }

  // Appends a constant bias column.
  DenseMatrix apply(const DenseMatrix& x) const {
    DenseMatrix out(x.rows(), x.cols() + 1);
    out.leftCols(x.cols()) = (x.rowwise() - mean).array().rowwise() / scale.array();
    out.col(x.cols()).setOnes();
    return out;
  }
};

class SoftmaxRegression {
 public:
  SoftmaxRegression(const DenseMatrix& x, const std::vector<int>& y, int classes, double strength,
                    const LogisticOptions& options) {
    const auto n = static_cast<double>(x.rows());
    const auto d = x.cols();
    weights_ = DenseMatrix::Zero(d, classes);
    DenseMatrix onehot = DenseMatrix::Zero(x.rows(), classes);
    for (Eigen::Index i = 0; i < x.rows(); ++i) onehot(i, y[static_cast<std::size_t>(i)]) = 1.0;
    const double penalty = 1.0 / (strength * n);
    // Softmax cross-entropy is (1/2) * ||x||^2-smooth per sample.
    const double lipschitz = 0.5 * x.squaredNorm() / n + penalty;
    const double lr = std::min(options.learning_rate, 1.0 / lipschitz);

    DenseMatrix probs(x.rows(), classes);
    for (std::size_t it = 0; it < options.max_iterations; ++it) {
      softmax(x, probs);
      DenseMatrix grad = x.transpose() * (probs - onehot) / n;
      grad.topRows(d - 1) += penalty * weights_.topRows(d - 1);
      if (grad.norm() < options.tolerance) break;
      weights_ -= lr * grad;
    }
  }

  std::vector<int> predict(const DenseMatrix& x) const {
    DenseMatrix scores = x * weights_;
    std::vector<int> out(static_cast<std::size_t>(x.rows()));
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      Eigen::Index best = 0;
      for (Eigen::Index c = 1; c < scores.cols(); ++c)
        if (scores(i, c) > scores(i, best)) best = c;
      out[static_cast<std::size_t>(i)] = static_cast<int>(best);
    }
    return out;
  }

 private:
  void softmax(const DenseMatrix& x, DenseMatrix& probs) const {
    probs.noalias() = x * weights_;
    for (Eigen::Index i = 0; i < probs.rows(); ++i) {
      probs.row(i).array() -= probs.row(i).maxCoeff();
      probs.row(i) = probs.row(i).array().exp();
      probs.row(i) /= probs.row(i).sum();
    }
  }

  DenseMatrix weights_;
};

double accuracy(const std::vector<int>& predicted, const std::vector<int>& truth) {
  if (truth.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += predicted[i] == truth[i];
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

std::vector<int> gather_labels(const std::vector<int>& labels, const std::vector<NodeId>& idx) {
  std::vector<int> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(labels[i]);
  return out;
}

}  // namespace

LogisticResult logistic_eval(const DenseMatrix& z, const std::vector<int>& labels, const Split& split,
                             const std::vector<double>& strengths, LogisticOptions options) {
  if (static_cast<std::size_t>(z.rows()) != labels.size())
    throw ContractError("logistic_eval: embedding rows and labels differ in length");
  if (split.train.empty() || split.test.empty()) throw ContractError("logistic_eval: empty train or test split");
  if (strengths.empty()) throw ContractError("logistic_eval: empty strength grid");

  const std::vector<int> y_train = gather_labels(labels, split.train);
  if (std::all_of(y_train.begin(), y_train.end(), [&](int c) { return c == y_train.front(); }))
    throw InputError("logistic_eval: training split contains a single class");
  const int classes = *std::max_element(labels.begin(), labels.end()) + 1;

  const Standardizer standardizer(gather_rows(z, split.train));
  const DenseMatrix x_train = standardizer.apply(gather_rows(z, split.train));
  const DenseMatrix x_val = standardizer.apply(gather_rows(z, split.val));
  const DenseMatrix x_test = standardizer.apply(gather_rows(z, split.test));
  const std::vector<int> y_val = gather_labels(labels, split.val);
  const std::vector<int> y_test = gather_labels(labels, split.test);

  // Each strength is an independent fit; results are reduced in grid order.
  std::vector<LogisticResult> fits(strengths.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < strengths.size(); i = next++) {
      SoftmaxRegression model(x_train, y_train, classes, strengths[i], options);
      // Without validation nodes the training accuracy drives the selection.
      fits[i].val_accuracy = split.val.empty() ? accuracy(model.predict(x_train), y_train)
                                               : accuracy(model.predict(x_val), y_val);
      fits[i].test_accuracy = accuracy(model.predict(x_test), y_test);
      fits[i].strength = strengths[i];
    }
  };
  {
    const auto threads = std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, strengths.size());
    std::vector<std::jthread> pool;
    for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
  }
  LogisticResult best = fits.front();
  for (const auto& f : fits)
    if (f.val_accuracy > best.val_accuracy) best = f;
  return best;
}

RepeatedAccuracy logistic_eval_repeated(const DenseMatrix& z, const std::vector<int>& labels, std::size_t repeats,
                                        std::uint64_t seed) {
  RepeatedAccuracy out;
  for (std::size_t r = 0; r < repeats; ++r) {
    const Split split = make_splits(static_cast<std::size_t>(z.rows()), derive_seed(seed, {r}));
    out.runs.push_back(logistic_eval(z, labels, split).test_accuracy);
  }
  const double n = static_cast<double>(out.runs.size());
  out.mean = std::accumulate(out.runs.begin(), out.runs.end(), 0.0) / n;
  double var = 0.0;
  for (double a : out.runs) var += (a - out.mean) * (a - out.mean);
  out.std = std::sqrt(var / n);
  return out;
}

MlknnResult mlknn_eval(const DenseMatrix& z, const LabelSet& labels, const Split& split, MlknnOptions options) {
  if (static_cast<std::size_t>(z.rows()) != labels.size())
    throw ContractError("mlknn_eval: embedding rows and labels differ in length");
  if (split.train.size() < 2) throw ContractError("mlknn_eval: need at least two training nodes");
  const int classes = labels.num_classes;
  const std::size_t k = std::min(options.k, split.train.size() - 1);
  const double s = options.smoothing;

  const DenseMatrix train = gather_rows(z, split.train);
  const Eigen::VectorXd train_sq = train.rowwise().squaredNorm();

  // Indices (into split.train) of the k nearest training nodes, ties by position.
  auto neighbors = [&](const Eigen::RowVectorXd& query, std::ptrdiff_t exclude) {
    Eigen::VectorXd dist = train_sq - 2.0 * (train * query.transpose());
    dist.array() += query.squaredNorm();
    std::vector<std::size_t> order;
    order.reserve(static_cast<std::size_t>(train.rows()));
    for (Eigen::Index i = 0; i < train.rows(); ++i)
      if (i != exclude) order.push_back(static_cast<std::size_t>(i));
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                      [&](std::size_t a, std::size_t b) { return dist[a] != dist[b] ? dist[a] < dist[b] : a < b; });
    order.resize(k);
    return order;
  };

  std::vector<std::vector<char>> has(split.train.size(), std::vector<char>(classes, 0));
  for (std::size_t i = 0; i < split.train.size(); ++i)
    for (int l : labels.labels[split.train[i]]) has[i][l] = 1;

  auto neighbor_counts = [&](const std::vector<std::size_t>& nb) {
    std::vector<int> c(classes, 0);
    for (auto j : nb)
      for (int l = 0; l < classes; ++l) c[l] += has[j][l];
    return c;
  };

  // Prior and likelihood tables.
  const double m = static_cast<double>(split.train.size());
  std::vector<double> prior(classes);
  std::vector<std::vector<double>> with(classes, std::vector<double>(k + 1, 0.0));
  std::vector<std::vector<double>> without(classes, std::vector<double>(k + 1, 0.0));
  for (int l = 0; l < classes; ++l) {
    double count = 0.0;
    for (std::size_t i = 0; i < split.train.size(); ++i) count += has[i][l];
    prior[l] = (s + count) / (2.0 * s + m);
  }
  for (std::size_t i = 0; i < split.train.size(); ++i) {
    const auto c = neighbor_counts(neighbors(train.row(static_cast<Eigen::Index>(i)), static_cast<std::ptrdiff_t>(i)));
    for (int l = 0; l < classes; ++l) (has[i][l] ? with : without)[l][static_cast<std::size_t>(c[l])] += 1.0;
  }
  auto likelihood = [&](const std::vector<double>& table, std::size_t c) {
    const double total = std::accumulate(table.begin(), table.end(), 0.0);
    return (s + table[c]) / (s * static_cast<double>(k + 1) + total);
  };

  MlknnResult out;
  std::size_t exact = 0;
  for (auto node : split.test) {
    const auto c = neighbor_counts(neighbors(z.row(node), -1));
    std::vector<int> pred;
    for (int l = 0; l < classes; ++l) {
      const auto cl = static_cast<std::size_t>(c[l]);
      if (prior[l] * likelihood(with[l], cl) > (1.0 - prior[l]) * likelihood(without[l], cl)) pred.push_back(l);
    }
    std::vector<int> truth = labels.labels[node];
    std::sort(truth.begin(), truth.end());
    exact += pred == truth;
    out.predicted.push_back(std::move(pred));
  }
  out.exact_match = split.test.empty() ? 0.0 : static_cast<double>(exact) / static_cast<double>(split.test.size());

  DenseMatrix hits = DenseMatrix::Zero(classes, classes), counts = DenseMatrix::Zero(classes, classes);
  for (std::size_t t = 0; t < split.test.size(); ++t) {
    std::vector<int> truth = labels.labels[split.test[t]];
    std::sort(truth.begin(), truth.end());
    truth.erase(std::unique(truth.begin(), truth.end()), truth.end());
    if (truth.empty() || truth.size() > 2) continue;
    const int i = truth.front(), j = truth.back();
    const auto& pred = out.predicted[t];
    double score = 0.0;
    if (options.score == HeatmapScore::kExactSet) {
      score = pred == truth ? 1.0 : 0.0;
    } else {
      for (int l : truth) score += std::binary_search(pred.begin(), pred.end(), l);
      score /= static_cast<double>(truth.size());
    }
    hits(i, j) += score;
    counts(i, j) += 1.0;
    if (i != j) {
      hits(j, i) += score;
      counts(j, i) += 1.0;
    }
  }
  out.heatmap = DenseMatrix(classes, classes);
  for (int i = 0; i < classes; ++i)
    for (int j = 0; j < classes; ++j)
      out.heatmap(i, j) = counts(i, j) > 0 ? hits(i, j) / counts(i, j) : std::numeric_limits<double>::quiet_NaN();
  return out;
}

double mean_off_diagonal(const HeatmapMatrix& h) {
  double total = 0.0;
  std::size_t cells = 0;
  for (Eigen::Index i = 0; i < h.rows(); ++i)
    for (Eigen::Index j = i + 1; j < h.cols(); ++j)
      if (!std::isnan(h(i, j))) {
        total += h(i, j);
        ++cells;
      }
  return cells ? total / static_cast<double>(cells) : std::numeric_limits<double>::quiet_NaN();
}

double mean_diagonal(const HeatmapMatrix& h) {
  double total = 0.0;
  std::size_t cells = 0;
  for (Eigen::Index i = 0; i < h.rows(); ++i)
    if (!std::isnan(h(i, i))) {
      total += h(i, i);
      ++cells;
    }
  return cells ? total / static_cast<double>(cells) : std::numeric_limits<double>::quiet_NaN();
}

void write_heatmap_csv(const HeatmapMatrix& h, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  for (Eigen::Index i = 0; i < h.rows(); ++i) {
    for (Eigen::Index j = 0; j < h.cols(); ++j) {
      if (j) out << ',';
      if (!std::isnan(h(i, j))) out << format_double(h(i, j));
    }
    out << '\n';
  }
}

}  // namespace fsgcl
