#include <doctest.h>

#include <random>

#include "fsgcl/autodiff.hpp"
#include "fsgcl/error.hpp"
#include "oracles.hpp"

using namespace fsgcl;
namespace ad = fsgcl::ad;

namespace {

using Builder = std::function<ad::Tensor(ad::Tape&, const std::vector<ad::Tensor>&)>;

// Analytic gradients of sum(w .* f(inputs)) for a fixed random weighting w,
// checked against central differences for every input.
void check_gradients(const Builder& f, const std::vector<DenseMatrix>& inputs, std::mt19937_64& rng,
                     double tolerance = 1e-6) {
  DenseMatrix weights;
  auto evaluate = [&](const std::vector<DenseMatrix>& values, std::vector<DenseMatrix>* grads) {
    ad::Tape tape;
    std::vector<ad::Tensor> leaves;
    for (const auto& v : values) leaves.push_back(tape.parameter(v));
    const ad::Tensor out = f(tape, leaves);
    if (weights.size() == 0) weights = oracle::random_matrix(out.rows(), out.cols(), rng);
    const ad::Tensor loss = ad::sum(ad::rowwise_dot(out, tape.constant(weights)));
    if (grads) {
      tape.backward(loss);
      for (const auto& l : leaves) grads->push_back(l.grad());
    }
    return loss.item();
  };
  std::vector<DenseMatrix> analytic;
  evaluate(inputs, &analytic);
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    auto probe = [&](const DenseMatrix& v) {
      auto values = inputs;
      values[i] = v;
      return evaluate(values, nullptr);
    };
    const DenseMatrix numeric = oracle::numeric_gradient(probe, inputs[i]);
    INFO("input " << i << " analytic\n" << analytic[i] << "\nnumeric\n" << numeric);
    CHECK(oracle::relative_error(analytic[i], numeric) < tolerance);
  }
}

}  // namespace

TEST_CASE("matmul with identity and sum gradient") {
  ad::Tape tape;
  std::mt19937_64 rng(1);
  const DenseMatrix xv = oracle::random_matrix(3, 3, rng);
  const auto i = tape.constant(DenseMatrix::Identity(3, 3));
  const auto x = tape.parameter(xv);
  const auto y = ad::matmul(i, x);
  CHECK(y.value() == xv);
  tape.backward(ad::sum(y));
  CHECK(x.grad() == DenseMatrix::Ones(3, 3));
  CHECK(i.grad() == DenseMatrix::Zero(3, 3));
}

TEST_CASE("sum of a parameter has unit gradient") {
  ad::Tape tape;
  const auto w = tape.parameter(DenseMatrix::Constant(2, 2, 0.3));
  tape.backward(ad::sum(w));
  CHECK(w.grad() == DenseMatrix::Ones(2, 2));
}

TEST_CASE("prelu definition") {
  ad::Tape tape;
  const auto x = tape.parameter(DenseMatrix::Constant(1, 1, -2.0));
  const auto a = tape.parameter(DenseMatrix::Constant(1, 1, 0.25));
  const auto y = ad::prelu(x, a);
  CHECK(y.item() == -0.5);
  tape.backward(y);
  CHECK(x.grad()(0, 0) == 0.25);
  CHECK(a.grad()(0, 0) == -2.0);
}

TEST_CASE("row normalization") {
  ad::Tape tape;
  DenseMatrix v(1, 2);
  v << 3, 4;
  const auto y = ad::row_l2_normalize(tape.parameter(v));
  CHECK(y.value()(0, 0) == doctest::Approx(0.6));
  CHECK(y.value()(0, 1) == doctest::Approx(0.8));
  const auto zero = ad::row_l2_normalize(tape.constant(DenseMatrix::Zero(2, 3)));
  CHECK(zero.value() == DenseMatrix::Zero(2, 3));
}

TEST_CASE("every op matches central differences") {
  std::mt19937_64 rng(42);
  const auto s = SparseGraph::from_triplets(4, {{0, 1, 0.5}, {1, 0, 0.5}, {2, 3, -1.5}, {3, 3, 2.0}, {1, 2, 0.25}});
  for (int trial = 0; trial < 5; ++trial) {
    const DenseMatrix a = oracle::random_matrix(4, 3, rng), b = oracle::random_matrix(3, 5, rng);
    const DenseMatrix c = oracle::random_matrix(4, 3, rng), row = oracle::random_matrix(1, 3, rng);
    const DenseMatrix slope = oracle::random_matrix(1, 1, rng), sq = oracle::random_matrix(4, 4, rng);
    check_gradients([](ad::Tape&, const auto& in) { return ad::matmul(in[0], in[1]); }, {a, b}, rng);
    check_gradients([](ad::Tape&, const auto& in) { return ad::matmul_nt(in[0], in[1]); }, {a, c}, rng);
    check_gradients([&](ad::Tape&, const auto& in) { return ad::spmm(s, in[0]); }, {a}, rng);
    check_gradients([](ad::Tape&, const auto& in) { return ad::add(in[0], in[1]); }, {a, c}, rng);
    check_gradients([](ad::Tape&, const auto& in) { return ad::add_row(in[0], in[1]); }, {a, row}, rng);
    check_gradients([](ad::Tape&, const auto& in) { return ad::scale(in[0], -1.7); }, {a}, rng);
    check_gradients([](ad::Tape&, const auto& in) { return ad::prelu(in[0], in[1]); }, {a, slope}, rng);
    check_gradients([](ad::Tape&, const auto& in) { return ad::row_l2_normalize(in[0]); }, {a}, rng);
    check_gradients([](ad::Tape&, const auto& in) { return ad::rowwise_dot(in[0], in[1]); }, {a, c}, rng);
    check_gradients([](ad::Tape&, const auto& in) { return ad::mean(in[0]); }, {a}, rng);
    check_gradients([](ad::Tape&, const auto& in) { return ad::sum(in[0]); }, {a}, rng);
    check_gradients([](ad::Tape&, const auto& in) { return ad::cross_entropy_diagonal(in[0]); }, {sq}, rng);
  }
}

TEST_CASE("three-op chain matches central differences") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    check_gradients(
        [](ad::Tape&, const auto& in) {
          return ad::row_l2_normalize(ad::prelu(ad::matmul(in[0], in[1]), in[2]));
        },
        {oracle::random_matrix(5, 4, rng), oracle::random_matrix(4, 3, rng), DenseMatrix::Constant(1, 1, 0.25)}, rng,
        1e-4);
  }
}

TEST_CASE("negative cosine is stationary at alignment") {
  ad::Tape tape;
  DenseMatrix v(2, 3);
  v << 0.6, 0.8, 0.0, 0.0, 0.0, 1.0;
  const auto p = tape.parameter(v);
  const auto q = tape.constant(v);
  const auto loss = ad::scale(ad::mean(ad::rowwise_dot(ad::row_l2_normalize(p), ad::row_l2_normalize(q))), -1.0);
  tape.backward(loss);
  CHECK(loss.item() == doctest::Approx(-1.0));
  CHECK(p.grad().norm() < 1e-12);
}

TEST_CASE("contract and numeric errors") {
  ad::Tape tape;
  const auto a = tape.parameter(DenseMatrix::Ones(2, 3));
  const auto b = tape.parameter(DenseMatrix::Ones(2, 3));
  CHECK_THROWS_AS(ad::matmul(a, b), ContractError);
  CHECK_THROWS_AS(ad::rowwise_dot(a, tape.constant(DenseMatrix::Ones(3, 3))), ContractError);
  CHECK_THROWS_AS(tape.backward(a), ContractError);
  const auto loss = ad::sum(a);
  tape.backward(loss);
  CHECK_THROWS_AS(tape.backward(loss), ContractError);
  tape.reset();
  const auto big = tape.parameter(DenseMatrix::Constant(1, 1, 1e308));
  CHECK_THROWS_AS(ad::scale(big, 10.0), NumericError);
  DenseMatrix nan_value = DenseMatrix::Zero(1, 1);
  nan_value(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(tape.constant(nan_value), NumericError);
}

TEST_CASE("unreachable parameters get zero gradients and constants none") {
  ad::Tape tape;
  const auto used = tape.parameter(DenseMatrix::Ones(2, 2));
  const auto unused = tape.parameter(DenseMatrix::Ones(2, 2));
  const auto c = tape.constant(DenseMatrix::Ones(2, 2));
  tape.backward(ad::sum(ad::add(used, c)));
  CHECK(unused.grad() == DenseMatrix::Zero(2, 2));
  CHECK(c.grad() == DenseMatrix::Zero(2, 2));
  CHECK_FALSE(c.requires_grad());
}

TEST_CASE("forward and backward are bit-identical across runs") {
  std::mt19937_64 rng(9);
  const DenseMatrix a = oracle::random_matrix(6, 4, rng), w = oracle::random_matrix(4, 4, rng);
  auto run = [&] {
    ad::Tape tape;
    const auto x = tape.parameter(a);
    const auto y = ad::mean(ad::row_l2_normalize(ad::matmul(x, tape.parameter(w))));
    tape.backward(y);
    return std::make_pair(y.item(), DenseMatrix(x.grad()));
  };
  const auto r1 = run(), r2 = run();
  CHECK(r1.first == r2.first);
  CHECK(r1.second == r2.second);
}
