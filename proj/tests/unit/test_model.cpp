#include <doctest.h>

#include <random>

#include "fsgcl/error.hpp"
#include "fsgcl/model.hpp"
#include "oracles.hpp"
#include "scratch.hpp"

using namespace fsgcl;
namespace ad = fsgcl::ad;

namespace {

ModelConfig small_config(std::size_t input_dim, std::size_t d, std::size_t t, std::size_t layers = 1) {
  ModelConfig c;
  c.input_dim = input_dim;
  c.hidden_dim = d;
  c.num_semantic = t;
  c.gcn_layers = layers;
  c.predictor_layers = 2;
  c.motif_weights.assign(t, 1.0 / static_cast<double>(std::max<std::size_t>(t, 1)));
  return c;
}

DenseMatrix& param(NetworkParams& p, const std::string& name) { return p.store().values[p.store().index_of(name)]; }

}  // namespace

TEST_CASE("single node with only its self-loop passes features through") {
  ModelConfig c = small_config(3, 3, 0);
  NetworkParams p(c, Role::kOnline, 1);
  param(p, "enc.v0.g0.l0.W") = DenseMatrix::Identity(3, 3);
  ad::Tape tape;
  const auto bound = bind(tape, p, false);
  const auto norm = sym_normalized_adjacency(SparseGraph(1), true);
  DenseMatrix x(1, 3);
  x << 0.5, 1.0, 2.0;
  const auto z = gcn_encode(norm, tape.constant(x), bound, p.encoder(0, 0));
  CHECK(z.value().isApprox(x));
}

TEST_CASE("connected twins with identical features get identical rows") {
  ModelConfig c = small_config(2, 2, 0);
  NetworkParams p(c, Role::kOnline, 1);
  param(p, "enc.v0.g0.l0.W") = DenseMatrix::Identity(2, 2);
  ad::Tape tape;
  const auto bound = bind(tape, p, false);
  const auto norm = sym_normalized_adjacency(SparseGraph::from_triplets(2, {{0, 1, 1.0}, {1, 0, 1.0}}), true);
  DenseMatrix x(2, 2);
  x << 1.0, -1.0, 1.0, -1.0;
  const auto z = gcn_encode(norm, tape.constant(x), bound, p.encoder(0, 0));
  CHECK(z.value().row(0) == z.value().row(1));
}

TEST_CASE("gcn matches the dense oracle") {
  std::mt19937_64 rng(31);
  for (std::size_t layers : {1, 2}) {
    const auto g = oracle::random_graph(5, 0.5, rng);
    ModelConfig c = small_config(4, 3, 1, layers);
    NetworkParams p(c, Role::kOnline, 9);
    ad::Tape tape;
    const auto bound = bind(tape, p, false);
    const DenseMatrix x = oracle::random_matrix(5, 4, rng);
    const auto z = gcn_encode(sym_normalized_adjacency(g, true), tape.constant(x), bound, p.encoder(1, 1));
    std::vector<DenseMatrix> w;
    std::vector<double> slopes;
    for (std::size_t l = 0; l < layers; ++l) {
      w.push_back(param(p, "enc.v1.g1.l" + std::to_string(l) + ".W"));
      slopes.push_back(param(p, "enc.v1.g1.l" + std::to_string(l) + ".prelu")(0, 0));
    }
    CHECK((z.value() - oracle::gcn(g, x, w, slopes)).cwiseAbs().maxCoeff() < 1e-13);
  }
  ModelConfig c = small_config(4, 3, 0);
  NetworkParams p(c, Role::kOnline, 9);
  ad::Tape tape;
  const auto bound = bind(tape, p, false);
  CHECK_THROWS_AS(gcn_encode(sym_normalized_adjacency(SparseGraph(3), true), tape.constant(DenseMatrix::Ones(4, 4)),
                             bound, p.encoder(0, 0)),
                  ContractError);
}

TEST_CASE("combine examples") {
  ad::Tape tape;
  const auto z0 = tape.constant(DenseMatrix::Constant(2, 2, 3.0));
  const auto ones = tape.constant(DenseMatrix::Ones(2, 2));
  CHECK(combine(z0, {ones}, {1.0}, 0.0).value() == z0.value());
  CHECK(combine(z0, {ones}, {1.0}, 1.0).value() == DenseMatrix::Constant(2, 2, 4.0));
  const auto photos = combine(z0, {ones, ones, ones}, {0.7, 0.1, 0.2}, 2.0);
  CHECK((photos.value() - DenseMatrix::Constant(2, 2, 3.0 + 2.0 * 1.0)).cwiseAbs().maxCoeff() < 1e-15);
  CHECK_THROWS_AS(combine(z0, {ones}, {0.5, 0.5}, 1.0), ContractError);
}

TEST_CASE("combine is linear with coefficient beta * w_i") {
  std::mt19937_64 rng(2);
  ad::Tape tape;
  const DenseMatrix a = oracle::random_matrix(3, 2, rng), b = oracle::random_matrix(3, 2, rng);
  const DenseMatrix c0 = oracle::random_matrix(3, 2, rng), d = oracle::random_matrix(3, 2, rng);
  const std::vector<double> w{0.3, 0.6};
  auto eval = [&](const DenseMatrix& z0, const DenseMatrix& z1, const DenseMatrix& z2) {
    return combine(tape.constant(z0), {tape.constant(z1), tape.constant(z2)}, w, 0.5).value();
  };
  const DenseMatrix base = eval(c0, a, b);
  CHECK((eval(c0, a + d, b) - base - 0.5 * 0.3 * d).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((eval(c0, a, b + d) - base - 0.5 * 0.6 * d).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((eval(c0 + d, a, b) - base - d).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("identity projector and predictor reduce to prelu") {
  ModelConfig c = small_config(2, 3, 0);
  c.predictor_layers = 1;
  NetworkParams p(c, Role::kOnline, 4);
  param(p, "proj.0.U") = DenseMatrix::Identity(3, 3);
  param(p, "pred.0.l0.E") = DenseMatrix::Identity(3, 3);
  ad::Tape tape;
  const auto bound = bind(tape, p, false);
  DenseMatrix z(2, 3);
  z << 1, -2, 3, -4, 5, -6;
  const DenseMatrix expected = oracle::prelu(z, 0.25);
  CHECK(project(tape.constant(z), bound, 0).value() == expected);
  CHECK(predict(tape.constant(z), bound, 0).value() == expected);
}

TEST_CASE("two-layer predictor composes") {
  ModelConfig c = small_config(2, 3, 0);
  NetworkParams p(c, Role::kOnline, 4);
  std::mt19937_64 rng(8);
  const DenseMatrix q = oracle::random_matrix(4, 3, rng);
  ad::Tape tape;
  const auto bound = bind(tape, p, false);
  DenseMatrix h = q;
  for (int l = 0; l < 2; ++l) {
    const std::string pre = "pred.1.l" + std::to_string(l);
    h = oracle::prelu((h * param(p, pre + ".E")).rowwise() + param(p, pre + ".a").row(0),
                      param(p, pre + ".prelu")(0, 0));
  }
  CHECK((predict(tape.constant(q), bound, 1).value() - h).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("target network has no predictor and mirrors the online prefix") {
  ModelConfig c = small_config(3, 4, 2);
  NetworkParams online(c, Role::kOnline, 1), target(c, Role::kTarget, 2);
  CHECK_THROWS_AS(target.predictor(0), ContractError);
  CHECK(target.store().size() == online.shared_size());
  for (std::size_t i = 0; i < target.store().size(); ++i) {
    CHECK(target.store().names[i] == online.store().names[i]);
    CHECK(target.store().values[i].rows() == online.store().values[i].rows());
    CHECK(target.store().values[i].cols() == online.store().values[i].cols());
  }
  ad::Tape tape;
  const auto prepared = prepare_structures({SparseGraph(3), SparseGraph(3), SparseGraph(3)});
  const auto bundle = forward(prepared, tape.constant(DenseMatrix::Ones(3, 3)), bind(tape, target, false), 0);
  CHECK(bundle.p.empty());
  CHECK(bundle.q.size() == 4);
  CHECK(bundle.z.size() == 4);
}

TEST_CASE("forward with no semantic graphs") {
  ModelConfig c = small_config(3, 4, 0);
  NetworkParams p(c, Role::kOnline, 1);
  ad::Tape tape;
  const auto prepared = prepare_structures({SparseGraph(2)});
  const auto bundle = forward(prepared, tape.constant(DenseMatrix::Ones(2, 3)), bind(tape, p, false), 0);
  REQUIRE(bundle.z.size() == 2);
  CHECK(bundle.z[1].value() == bundle.z[0].value());
  CHECK(bundle.p.size() == 2);
  CHECK_THROWS_AS(forward(prepare_structures({SparseGraph(2), SparseGraph(2)}), tape.constant(DenseMatrix::Ones(2, 3)),
                          bind(tape, p, false), 0),
                  ContractError);
}

TEST_CASE("full forward matches a dense oracle") {
  std::mt19937_64 rng(77);
  const std::size_t n = 6, t = 2;
  ModelConfig c = small_config(4, 3, t);
  c.beta = 0.7;
  c.motif_weights = {0.4, 0.6};
  NetworkParams p(c, Role::kOnline, 3);
  std::vector<SparseGraph> structures;
  for (std::size_t i = 0; i <= t; ++i) structures.push_back(oracle::random_graph(n, 0.4, rng));
  const DenseMatrix x = oracle::random_matrix(static_cast<Eigen::Index>(n), 4, rng);
  ad::Tape tape;
  const auto bundle = forward(prepare_structures(structures), tape.constant(x), bind(tape, p, false), 1);

  std::vector<DenseMatrix> z;
  for (std::size_t g = 0; g <= t; ++g) {
    const std::string pre = "enc.v1.g" + std::to_string(g) + ".l0";
    z.push_back(oracle::gcn(structures[g], x, {param(p, pre + ".W")}, {param(p, pre + ".prelu")(0, 0)}));
  }
  z.push_back(z[0] + 0.7 * (0.4 * z[1] + 0.6 * z[2]));
  for (std::size_t i = 0; i < t + 2; ++i) {
    CHECK((bundle.z[i].value() - z[i]).cwiseAbs().maxCoeff() < 1e-13);
    const std::string pre = "proj." + std::to_string(i);
    const DenseMatrix q =
        oracle::prelu((z[i] * param(p, pre + ".U")).rowwise() + param(p, pre + ".b").row(0), param(p, pre + ".prelu")(0, 0));
    CHECK((bundle.q[i].value() - q).cwiseAbs().maxCoeff() < 1e-13);
  }
}

TEST_CASE("encoders are separate per graph") {
  std::mt19937_64 rng(5);
  ModelConfig c = small_config(3, 3, 2);
  NetworkParams p(c, Role::kOnline, 3);
  std::vector<SparseGraph> structures;
  for (int i = 0; i < 3; ++i) structures.push_back(oracle::random_graph(5, 0.5, rng));
  const DenseMatrix x = oracle::random_matrix(5, 3, rng);
  const auto prepared = prepare_structures(structures);
  auto encode = [&] {
    ad::Tape tape;
    const auto b = forward(prepared, tape.constant(x), bind(tape, p, false), 0);
    std::vector<DenseMatrix> z;
    for (const auto& t : b.z) z.push_back(t.value());
    return z;
  };
  const auto before = encode();
  param(p, "enc.v0.g1.l0.W") *= 3.0;
  const auto after = encode();
  CHECK(after[0] == before[0]);
  CHECK(after[2] == before[2]);
  CHECK(after[1] != before[1]);
}

TEST_CASE("parameter initialization is seeded") {
  ModelConfig c = small_config(3, 4, 1);
  CHECK(NetworkParams(c, Role::kOnline, 5).store().values == NetworkParams(c, Role::kOnline, 5).store().values);
  CHECK(NetworkParams(c, Role::kOnline, 5).store().values != NetworkParams(c, Role::kOnline, 6).store().values);
  NetworkParams fresh(c, Role::kOnline, 5);
  CHECK(param(fresh, "enc.v0.g0.l0.prelu")(0, 0) == 0.25);
  ModelConfig bad = c;
  bad.motif_weights = {1.0, 2.0};
  CHECK_THROWS_AS(NetworkParams(bad, Role::kOnline, 1), ContractError);
}

TEST_CASE("target forward leaves gradients untouched") {
  ModelConfig c = small_config(3, 3, 1);
  NetworkParams target(c, Role::kTarget, 2);
  ad::Tape tape;
  const auto bound = bind(tape, target, false);
  const auto b = forward(prepare_structures({SparseGraph(4), SparseGraph(4)}), tape.constant(DenseMatrix::Ones(4, 3)),
                         bound, 0);
  tape.backward(ad::sum(b.q.back()));
  for (const auto& t : bound.tensors) {
    CHECK_FALSE(t.requires_grad());
    CHECK(t.grad().isZero());
  }
}

TEST_CASE("parameter snapshot round trip") {
  Scratch s("snapshot");
  ModelConfig c = small_config(3, 4, 2);
  NetworkParams p(c, Role::kOnline, 11);
  save_params(p.store(), s.path("p.bin"), R"({"note": 1})");
  const ParamStore back = load_params(s.path("p.bin"));
  CHECK(back.names == p.store().names);
  CHECK(back.values == p.store().values);
  CHECK_THROWS_AS(load_params(s.write("bad.bin", "garbage-garbage-garbage")), ParseError);
}
