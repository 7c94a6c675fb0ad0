#include "fsgcl/autodiff.hpp"

#include <cmath>

#include "fsgcl/error.hpp"

namespace fsgcl::ad {

namespace {

std::string shape(const Matrix& m) {
  return "(" + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + ")";
}

void require_same_tape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.tape() == nullptr || a.tape() != b.tape())
    throw ContractError(std::string(op) + ": operands live on different tapes");
}

void require(bool cond, const char* op, const std::string& detail) {
  if (!cond) throw ContractError(std::string(op) + ": " + detail);
}

}  // namespace

Eigen::Index Tensor::rows() const { return value().rows(); }
Eigen::Index Tensor::cols() const { return value().cols(); }

const Matrix& Tensor::value() const {
  if (tape_ == nullptr) throw ContractError("use of an unbound tensor");
  return tape_->value_of(id_);
}

Matrix Tensor::grad() const {
  const Matrix& g = tape_->grad_of(id_);
  if (g.size() == 0) return Matrix::Zero(rows(), cols());
  return g;
}

bool Tensor::requires_grad() const { return tape_->requires_grad_of(id_); }

double Tensor::item() const {
  const Matrix& v = value();
  if (v.rows() != 1 || v.cols() != 1) throw ContractError("item() on non-scalar tensor " + shape(v));
  return v(0, 0);
}

Tensor Tape::constant(Matrix value) {
  if (!value.allFinite()) throw NumericError("constant: non-finite input");
  nodes_.push_back({std::move(value), {}, false, "constant", {}});
  return Tensor(this, nodes_.size() - 1);
}

Tensor Tape::parameter(Matrix value) {
  if (!value.allFinite()) throw NumericError("parameter: non-finite input");
  nodes_.push_back({std::move(value), {}, true, "parameter", {}});
  return Tensor(this, nodes_.size() - 1);
}

Tensor Tape::record(const char* op, Matrix value, std::vector<std::size_t> inputs, BackwardFn backward) {
  if (!value.allFinite()) throw NumericError(std::string(op) + " produced a non-finite value");
  bool needs = false;
  for (auto id : inputs) needs = needs || nodes_[id].requires_grad;
  nodes_.push_back({std::move(value), {}, needs, op, needs ? std::move(backward) : BackwardFn{}});
  return Tensor(this, nodes_.size() - 1);
}

void Tape::accumulate(std::size_t id, const Matrix& g) {
  Node& node = nodes_[id];
  if (!node.requires_grad) return;
  if (node.grad.size() == 0) node.grad = g;
  else node.grad += g;
}

void Tape::backward(const Tensor& loss) {
  if (loss.tape() != this) throw ContractError("backward: loss belongs to another tape");
  if (backward_done_) throw ContractError("backward called twice without reset");
  const Matrix& v = loss.value();
  if (v.rows() != 1 || v.cols() != 1) throw ContractError("backward: loss must be scalar, got " + shape(v));
  backward_done_ = true;
  accumulate(loss.id(), Matrix::Ones(1, 1));
  for (std::size_t id = loss.id() + 1; id-- > 0;) {
    Node& node = nodes_[id];
    if (node.backward && node.grad.size() != 0) node.backward(*this, id);
  }
}

void Tape::reset() {
  nodes_.clear();
  backward_done_ = false;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_same_tape(a, b, "matmul");
  require(a.cols() == b.rows(), "matmul", "shape mismatch " + shape(a.value()) + " * " + shape(b.value()));
  Tape& t = *a.tape();
  const auto ia = a.id(), ib = b.id();
  Matrix out = a.value() * b.value();
  return t.record("matmul", std::move(out), {ia, ib}, [ia, ib](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad_of(self);
    if (tp.requires_grad_of(ia)) tp.accumulate(ia, g * tp.value_of(ib).transpose());
    if (tp.requires_grad_of(ib)) tp.accumulate(ib, tp.value_of(ia).transpose() * g);
  });
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  require_same_tape(a, b, "matmul_nt");
  require(a.cols() == b.cols(), "matmul_nt", "shape mismatch " + shape(a.value()) + " * " + shape(b.value()) + "^T");
  Tape& t = *a.tape();
  const auto ia = a.id(), ib = b.id();
  Matrix out = a.value() * b.value().transpose();
  return t.record("matmul_nt", std::move(out), {ia, ib}, [ia, ib](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad_of(self);
    if (tp.requires_grad_of(ia)) tp.accumulate(ia, g * tp.value_of(ib));
    if (tp.requires_grad_of(ib)) tp.accumulate(ib, g.transpose() * tp.value_of(ia));
  });
}

Tensor spmm(const SparseGraph& s, const Tensor& x) {
  require(static_cast<Eigen::Index>(s.num_nodes()) == x.rows(), "spmm",
          "sparse matrix has " + std::to_string(s.num_nodes()) + " columns, dense operand " + shape(x.value()));
  Tape& t = *x.tape();
  const auto ix = x.id();
  const Matrix& xv = x.value();
  Matrix out = Matrix::Zero(xv.rows(), xv.cols());
  for (NodeId u = 0; u < s.num_nodes(); ++u) {
    const auto nb = s.neighbors(u);
    const auto vals = s.row_values(u);
    for (std::size_t k = 0; k < nb.size(); ++k) out.row(u) += vals[k] * xv.row(nb[k]);
  }
  const SparseGraph* sp = &s;
  return t.record("spmm", std::move(out), {ix}, [ix, sp](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad_of(self);
    Matrix gx = Matrix::Zero(g.rows(), g.cols());
    for (NodeId u = 0; u < sp->num_nodes(); ++u) {
      const auto nb = sp->neighbors(u);
      const auto vals = sp->row_values(u);
      for (std::size_t k = 0; k < nb.size(); ++k) gx.row(nb[k]) += vals[k] * g.row(u);
    }
    tp.accumulate(ix, gx);
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_tape(a, b, "add");
  require(a.rows() == b.rows() && a.cols() == b.cols(), "add",
          "shape mismatch " + shape(a.value()) + " + " + shape(b.value()));
  Tape& t = *a.tape();
  const auto ia = a.id(), ib = b.id();
  Matrix out = a.value() + b.value();
  return t.record("add", std::move(out), {ia, ib}, [ia, ib](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad_of(self);
    tp.accumulate(ia, g);
    tp.accumulate(ib, g);
  });
}

Tensor add_row(const Tensor& a, const Tensor& bias) {
  require_same_tape(a, bias, "add_row");
  require(bias.rows() == 1 && bias.cols() == a.cols(), "add_row",
          "bias " + shape(bias.value()) + " does not match " + shape(a.value()));
  Tape& t = *a.tape();
  const auto ia = a.id(), ib = bias.id();
  Matrix out = a.value().rowwise() + bias.value().row(0);
  return t.record("add_row", std::move(out), {ia, ib}, [ia, ib](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad_of(self);
    tp.accumulate(ia, g);
    if (tp.requires_grad_of(ib)) tp.accumulate(ib, g.colwise().sum());
  });
}

Tensor scale(const Tensor& a, double c) {
  Tape& t = *a.tape();
  const auto ia = a.id();
  Matrix out = a.value() * c;
  return t.record("scale", std::move(out), {ia}, [ia, c](Tape& tp, std::size_t self) {
    tp.accumulate(ia, tp.grad_of(self) * c);
  });
}

Tensor prelu(const Tensor& x, const Tensor& slope) {
  require_same_tape(x, slope, "prelu");
  require(slope.rows() == 1 && slope.cols() == 1, "prelu", "slope must be 1x1");
  Tape& t = *x.tape();
  const auto ix = x.id(), is = slope.id();
  const double a = slope.value()(0, 0);
  Matrix out = x.value().unaryExpr([a](double v) { return v > 0.0 ? v : a * v; });
  return t.record("prelu", std::move(out), {ix, is}, [ix, is](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad_of(self);
    const Matrix& xv = tp.value_of(ix);
    const double a = tp.value_of(is)(0, 0);
    if (tp.requires_grad_of(ix))
      tp.accumulate(ix, g.binaryExpr(xv, [a](double gi, double v) { return v > 0.0 ? gi : a * gi; }));
    if (tp.requires_grad_of(is)) {
      const double ds = g.binaryExpr(xv, [](double gi, double v) { return v > 0.0 ? 0.0 : gi * v; }).sum();
      tp.accumulate(is, Matrix::Constant(1, 1, ds));
    }
  });
}

Tensor row_l2_normalize(const Tensor& x) {
  Tape& t = *x.tape();
  const auto ix = x.id();
  const Matrix& xv = x.value();
  Eigen::VectorXd norms = xv.rowwise().norm().cwiseMax(kNormEpsilon);
  Matrix out = xv.array().colwise() / norms.array();
  return t.record("row_l2_normalize", std::move(out), {ix}, [ix](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad_of(self);
    const Matrix& xv = tp.value_of(ix);
    const Matrix& y = tp.value_of(self);
    Matrix gx(g.rows(), g.cols());
    for (Eigen::Index i = 0; i < g.rows(); ++i) {
      const double norm = xv.row(i).norm();
      if (norm > kNormEpsilon) gx.row(i) = (g.row(i) - y.row(i) * y.row(i).dot(g.row(i))) / norm;
      else gx.row(i) = g.row(i) / kNormEpsilon;
    }
    tp.accumulate(ix, gx);
  });
}

Tensor rowwise_dot(const Tensor& a, const Tensor& b) {
  require_same_tape(a, b, "rowwise_dot");
  require(a.rows() == b.rows() && a.cols() == b.cols(), "rowwise_dot",
          "shape mismatch " + shape(a.value()) + " . " + shape(b.value()));
  Tape& t = *a.tape();
  const auto ia = a.id(), ib = b.id();
  Matrix out = a.value().cwiseProduct(b.value()).rowwise().sum();
  return t.record("rowwise_dot", std::move(out), {ia, ib}, [ia, ib](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad_of(self);
    if (tp.requires_grad_of(ia)) tp.accumulate(ia, tp.value_of(ib).array().colwise() * g.col(0).array());
    if (tp.requires_grad_of(ib)) tp.accumulate(ib, tp.value_of(ia).array().colwise() * g.col(0).array());
  });
}

Tensor mean(const Tensor& a) {
  Tape& t = *a.tape();
  const auto ia = a.id();
  const Matrix& av = a.value();
  require(av.size() > 0, "mean", "empty tensor");
  const auto count = static_cast<double>(av.size());
  return t.record("mean", Matrix::Constant(1, 1, av.mean()), {ia}, [ia, count](Tape& tp, std::size_t self) {
    const Matrix& av = tp.value_of(ia);
    tp.accumulate(ia, Matrix::Constant(av.rows(), av.cols(), tp.grad_of(self)(0, 0) / count));
  });
}

Tensor sum(const Tensor& a) {
  Tape& t = *a.tape();
  const auto ia = a.id();
  return t.record("sum", Matrix::Constant(1, 1, a.value().sum()), {ia}, [ia](Tape& tp, std::size_t self) {
    const Matrix& av = tp.value_of(ia);
    tp.accumulate(ia, Matrix::Constant(av.rows(), av.cols(), tp.grad_of(self)(0, 0)));
  });
}

Tensor cross_entropy_diagonal(const Tensor& logits) {
  const Matrix& s = logits.value();
  require(s.rows() == s.cols() && s.rows() > 0, "cross_entropy_diagonal", "logits must be square, got " + shape(s));
  Tape& t = *logits.tape();
  const auto il = logits.id();
  const auto n = s.rows();
  Matrix softmax(n, n);
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double peak = s.row(i).maxCoeff();
    softmax.row(i) = (s.row(i).array() - peak).exp();
    const double z = softmax.row(i).sum();
    softmax.row(i) /= z;
    total += peak + std::log(z) - s(i, i);
  }
  return t.record("cross_entropy_diagonal", Matrix::Constant(1, 1, total / static_cast<double>(n)), {il},
                  [il, softmax = std::move(softmax)](Tape& tp, std::size_t self) {
                    const double g = tp.grad_of(self)(0, 0);
                    Matrix gl = softmax;
                    gl.diagonal().array() -= 1.0;
                    tp.accumulate(il, gl * (g / static_cast<double>(gl.rows())));
                  });
}

}  // namespace fsgcl::ad
