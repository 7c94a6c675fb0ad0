#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "fsgcl/graph.hpp"

namespace fsgcl::ad {

using Matrix = DenseMatrix;

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid while the
/// tape that created it is alive and not reset.
class Tensor {
 public:
  Tensor() = default;

  Eigen::Index rows() const;
  Eigen::Index cols() const;
  const Matrix& value() const;
  /// Accumulated gradient; a zero matrix when nothing flowed into it.
  Matrix grad() const;
  bool requires_grad() const;
  /// Value of a 1x1 tensor.
  double item() const;

  Tape* tape() const noexcept { return tape_; }
  std::size_t id() const noexcept { return id_; }

 private:
  friend class Tape;
  Tensor(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Records operations in execution order; backward() replays them in exact
/// reverse. One tape per logical thread.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf that never receives gradients.
  Tensor constant(Matrix value);
  /// Leaf that accumulates gradients.
  Tensor parameter(Matrix value);

  /// Populates gradients of every reachable node from a 1x1 loss. Calling it
  /// twice without reset() is a ContractError.
  void backward(const Tensor& loss);
  /// Drops all recorded nodes; previously issued Tensors become invalid.
  void reset();

  std::size_t size() const noexcept { return nodes_.size(); }

  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  /// Records an op result. Throws NumericError naming `op` if `value` holds
  /// NaN or Inf. `backward` is dropped when no input requires gradients.
  Tensor record(const char* op, Matrix value, std::vector<std::size_t> inputs, BackwardFn backward);

  const Matrix& value_of(std::size_t id) const { return nodes_[id].value; }
  const Matrix& grad_of(std::size_t id) const { return nodes_[id].grad; }
  bool requires_grad_of(std::size_t id) const { return nodes_[id].requires_grad; }
  /// grad[id] += g (allocated lazily).
  void accumulate(std::size_t id, const Matrix& g);
  Tensor handle(std::size_t id) { return Tensor(this, id); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    const char* op = "";
    BackwardFn backward;
  };

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

Tensor matmul(const Tensor& a, const Tensor& b);
/// a * b^T
Tensor matmul_nt(const Tensor& a, const Tensor& b);
/// s * x with a constant sparse matrix; `s` must outlive the tape.
Tensor spmm(const SparseGraph& s, const Tensor& x);
Tensor add(const Tensor& a, const Tensor& b);
/// a + 1*bias for a 1 x cols bias row.
Tensor add_row(const Tensor& a, const Tensor& bias);
Tensor scale(const Tensor& a, double c);
/// max(x, 0) + slope * min(x, 0) with a 1x1 learnable slope.
Tensor prelu(const Tensor& x, const Tensor& slope);
/// x_i / max(||x_i||, 1e-12) per row.
Tensor row_l2_normalize(const Tensor& x);
/// n x 1 column of per-row dot products.
Tensor rowwise_dot(const Tensor& a, const Tensor& b);
/// Mean over all entries, as a 1x1 tensor.
Tensor mean(const Tensor& a);
Tensor sum(const Tensor& a);
/// mean_i( logsumexp(S_i) - S_ii ) for a square logit matrix.
Tensor cross_entropy_diagonal(const Tensor& logits);

inline constexpr double kNormEpsilon = 1e-12;

}  // namespace fsgcl::ad
