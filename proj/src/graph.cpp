#include "fsgcl/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include "fsgcl/error.hpp"

namespace fsgcl {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
bool parse_number(std::string_view token, T& out) {
  const char* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, out);
  return ec == std::errc() && ptr == end;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(trim(line.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::vector<std::string_view> split_whitespace(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

SparseGraph::SparseGraph(std::size_t n) : n_(n), row_ptr_(n + 1, 0) {}

SparseGraph::SparseGraph(std::size_t n, std::vector<std::size_t> row_ptr,
                         std::vector<NodeId> col_idx, std::vector<double> values)
    : n_(n), row_ptr_(std::move(row_ptr)), col_idx_(std::move(col_idx)), values_(std::move(values)) {
  if (row_ptr_.size() != n_ + 1 || row_ptr_.front() != 0 || row_ptr_.back() != col_idx_.size())
    throw ContractError("CSR row_ptr must have n+1 entries from 0 to nnz");
  if (values_.size() != col_idx_.size()) throw ContractError("CSR values/col_idx size mismatch");
  for (std::size_t u = 0; u < n_; ++u) {
    if (row_ptr_[u] > row_ptr_[u + 1]) throw ContractError("CSR row_ptr must be non-decreasing");
    for (std::size_t e = row_ptr_[u]; e < row_ptr_[u + 1]; ++e) {
      if (col_idx_[e] >= n_) throw ContractError("CSR column index out of range");
      if (e > row_ptr_[u] && col_idx_[e] <= col_idx_[e - 1])
        throw ContractError("CSR columns must be strictly increasing within a row");
    }
  }
}

SparseGraph SparseGraph::from_triplets(std::size_t n, std::vector<Triplet> triplets,
                                       Duplicates policy) {
  for (const auto& t : triplets)
    if (t.row >= n || t.col >= n) throw ContractError("triplet index out of range");
  // Stable so that kKeepFirst honors input order.
  std::stable_sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  SparseGraph g(n);
  g.col_idx_.reserve(triplets.size());
  g.values_.reserve(triplets.size());
  for (std::size_t i = 0; i < triplets.size(); ++i) {
    const auto& t = triplets[i];
    if (i > 0 && triplets[i - 1].row == t.row && triplets[i - 1].col == t.col) {
      if (policy == Duplicates::kSum) g.values_.back() += t.value;
      continue;
    }
    g.col_idx_.push_back(t.col);
    g.values_.push_back(t.value);
    ++g.row_ptr_[t.row + 1];
  }
  for (std::size_t u = 0; u < n; ++u) g.row_ptr_[u + 1] += g.row_ptr_[u];
  return g;
}

bool SparseGraph::has_edge(NodeId u, NodeId v) const noexcept {
  if (u >= n_) return false;
  const auto nb = neighbors(u);
  return std::binary_search(nb.begin(), nb.end(), v);
}

double SparseGraph::weight(NodeId u, NodeId v) const noexcept {
  if (u >= n_) return 0.0;
  const auto nb = neighbors(u);
  const auto it = std::lower_bound(nb.begin(), nb.end(), v);
  if (it == nb.end() || *it != v) return 0.0;
  return values_[row_ptr_[u] + static_cast<std::size_t>(it - nb.begin())];
}

bool SparseGraph::is_symmetric(double tol) const {
  for (NodeId u = 0; u < n_; ++u) {
    const auto nb = neighbors(u);
    const auto vals = row_values(u);
    for (std::size_t k = 0; k < nb.size(); ++k) {
      if (!has_edge(nb[k], u)) return false;
      if (std::abs(weight(nb[k], u) - vals[k]) > tol) return false;
    }
  }
  return true;
}

std::vector<Triplet> SparseGraph::to_triplets() const {
  std::vector<Triplet> out;
  out.reserve(nnz());
  for (NodeId u = 0; u < n_; ++u)
    for (std::size_t e = row_ptr_[u]; e < row_ptr_[u + 1]; ++e)
      out.push_back({u, col_idx_[e], values_[e]});
  return out;
}

DenseMatrix SparseGraph::to_dense() const {
  DenseMatrix m = DenseMatrix::Zero(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(n_));
  for (NodeId u = 0; u < n_; ++u)
    for (std::size_t e = row_ptr_[u]; e < row_ptr_[u + 1]; ++e) m(u, col_idx_[e]) = values_[e];
  return m;
}

bool LabelSet::is_multilabel() const {
  return std::any_of(labels.begin(), labels.end(), [](const auto& l) { return l.size() > 1; });
}

std::vector<int> LabelSet::primary() const {
  std::vector<int> out;
  out.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i].empty()) throw ContractError("node " + std::to_string(i) + " has no label");
    out.push_back(labels[i].front());
  }
  return out;
}

SparseGraph load_edge_list(const std::filesystem::path& path, std::size_t n,
                           EdgeListOptions options) {
  auto in = open_input(path);
  const std::string source = path.string();
  std::vector<Triplet> triplets;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto tokens = split_whitespace(body);
    if (tokens.size() != 2 && tokens.size() != 3)
      throw ParseError(source, line_no, "expected 'src dst [weight]'");
    std::uint64_t src = 0, dst = 0;
    double w = 1.0;
    if (!parse_number(tokens[0], src) || !parse_number(tokens[1], dst))
      throw ParseError(source, line_no, "node ids must be non-negative integers");
    if (tokens.size() == 3 && (!parse_number(tokens[2], w) || !std::isfinite(w)))
      throw ParseError(source, line_no, "weight must be a finite number");
    if (src >= n || dst >= n)
      throw InputError(source + ":" + std::to_string(line_no) + ": node id out of range for n=" +
                       std::to_string(n));
    if (src == dst && options.drop_self_loops) continue;
    triplets.push_back({static_cast<NodeId>(src), static_cast<NodeId>(dst), w});
    if (options.symmetrize && src != dst)
      triplets.push_back({static_cast<NodeId>(dst), static_cast<NodeId>(src), w});
  }
  return SparseGraph::from_triplets(n, std::move(triplets));
}

void write_edge_list(const SparseGraph& g, const std::filesystem::path& path, bool undirected,
                     bool with_weights) {
  auto out = open_output(path);
  for (NodeId u = 0; u < g.num_nodes(); ++u) {
    const auto nb = g.neighbors(u);
    const auto vals = g.row_values(u);
    for (std::size_t k = 0; k < nb.size(); ++k) {
      if (undirected && nb[k] < u) continue;
      out << u << ' ' << nb[k];
      if (with_weights) out << ' ' << format_double(vals[k]);
      out << '\n';
    }
  }
}

FeatureMatrix load_features(const std::filesystem::path& path) {
  auto in = open_input(path);
  const std::string source = path.string();
  std::vector<double> data;
  std::size_t cols = 0, rows = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = trim(line);
    if (body.empty()) continue;
    const auto cells = split(body, ',');
    if (rows == 0) cols = cells.size();
    if (cells.size() != cols)
      throw ParseError(source, line_no,
                       "ragged row: expected " + std::to_string(cols) + " columns, got " +
                           std::to_string(cells.size()));
    for (const auto cell : cells) {
      double v = 0.0;
      if (!parse_number(cell, v)) throw ParseError(source, line_no, "non-numeric cell '" + std::string(cell) + "'");
      if (!std::isfinite(v)) throw ParseError(source, line_no, "non-finite cell");
      data.push_back(v);
    }
    ++rows;
  }
  if (rows == 0) throw InputError(source + ": empty feature file");
  FeatureMatrix x(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  std::copy(data.begin(), data.end(), x.data());
  return x;
}

void write_matrix_csv(const DenseMatrix& m, const std::filesystem::path& path) {
  auto out = open_output(path);
  std::string line;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    line.clear();
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) line += ',';
      line += format_double(m(i, j));
    }
    line += '\n';
    out << line;
  }
}

LabelSet load_labels(const std::filesystem::path& path) {
  auto in = open_input(path);
  const std::string source = path.string();
  LabelSet out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = trim(line);
    if (body.empty()) throw ParseError(source, line_no, "node without labels");
    std::vector<int> node_labels;
    for (const auto cell : split(body, ',')) {
      int label = 0;
      if (!parse_number(cell, label) || label < 0)
        throw ParseError(source, line_no, "labels must be non-negative integers");
      node_labels.push_back(label);
      out.num_classes = std::max(out.num_classes, label + 1);
    }
    out.labels.push_back(std::move(node_labels));
  }
  if (out.labels.empty()) throw InputError(source + ": empty label file");
  return out;
}

void write_labels(const LabelSet& labels, const std::filesystem::path& path) {
  auto out = open_output(path);
  for (const auto& node : labels.labels) {
    for (std::size_t k = 0; k < node.size(); ++k) out << (k ? "," : "") << node[k];
    out << '\n';
  }
}

SparseGraph sym_normalized_adjacency(const SparseGraph& g, bool add_self_loops) {
  const std::size_t n = g.num_nodes();
  std::vector<Triplet> entries;
  entries.reserve(g.nnz() + (add_self_loops ? n : 0));
  for (NodeId u = 0; u < n; ++u) {
    const auto nb = g.neighbors(u);
    const auto vals = g.row_values(u);
    for (std::size_t k = 0; k < nb.size(); ++k) entries.push_back({u, nb[k], vals[k]});
    if (add_self_loops) entries.push_back({u, u, 1.0});
  }
  SparseGraph a = SparseGraph::from_triplets(n, std::move(entries), SparseGraph::Duplicates::kSum);

  std::vector<double> row_deg(n, 0.0), col_deg(n, 0.0);
  for (NodeId u = 0; u < n; ++u) {
    const auto nb = a.neighbors(u);
    const auto vals = a.row_values(u);
    for (std::size_t k = 0; k < nb.size(); ++k) {
      row_deg[u] += vals[k];
      col_deg[nb[k]] += vals[k];
    }
  }
  auto inv_sqrt = [](double d) { return d > 0.0 ? 1.0 / std::sqrt(d) : 0.0; };

  std::vector<std::size_t> row_ptr(a.row_ptr().begin(), a.row_ptr().end());
  std::vector<NodeId> col_idx(a.col_idx().begin(), a.col_idx().end());
  std::vector<double> values(a.values().begin(), a.values().end());
  for (NodeId u = 0; u < n; ++u)
    for (std::size_t e = row_ptr[u]; e < row_ptr[u + 1]; ++e)
      values[e] *= inv_sqrt(row_deg[u]) * inv_sqrt(col_deg[col_idx[e]]);
  return SparseGraph(n, std::move(row_ptr), std::move(col_idx), std::move(values));
}

}  // namespace fsgcl
