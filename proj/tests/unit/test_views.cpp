#include <doctest.h>

#include <random>

#include "fsgcl/error.hpp"
#include "fsgcl/views.hpp"
#include "oracles.hpp"
#include "scratch.hpp"

using namespace fsgcl;

TEST_CASE("ppr diffusion examples") {
  const auto single = ppr_diffusion(SparseGraph(1), 0.2);
  CHECK(single(0, 0) == doctest::Approx(0.2));

  const auto edge = SparseGraph::from_triplets(2, {{0, 1, 1.0}, {1, 0, 1.0}});
  const auto u = ppr_diffusion(edge, 0.2);
  CHECK(u(0, 0) == doctest::Approx(0.2 / 0.36).epsilon(1e-14));
  CHECK(u(0, 1) == doctest::Approx(0.16 / 0.36).epsilon(1e-14));
  CHECK(u(1, 0) == doctest::Approx(0.16 / 0.36).epsilon(1e-14));
  CHECK(u(1, 1) == doctest::Approx(0.2 / 0.36).epsilon(1e-14));

  std::mt19937_64 rng(3);
  const auto g = oracle::random_graph(15, 0.3, rng);
  const auto near_identity = ppr_diffusion(g, 0.999);
  CHECK((near_identity - DenseMatrix::Identity(15, 15)).cwiseAbs().maxCoeff() < 1e-2);

  CHECK_THROWS_AS(ppr_diffusion(edge, 0.0), ContractError);
  CHECK_THROWS_AS(ppr_diffusion(edge, 1.0), ContractError);
}

TEST_CASE("ppr diffusion matches the direct inverse and is symmetric") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 6; ++trial) {
    const auto g = oracle::random_graph(30 + 10 * trial, 0.1, rng);
    for (double alpha : {0.1, 0.2, 0.5}) {
      const auto u = ppr_diffusion(g, alpha);
      CHECK((u - oracle::ppr_inverse(g, alpha)).cwiseAbs().maxCoeff() < 1e-10);
      CHECK((u - u.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("series path agrees with the direct solve within its tolerance") {
  std::mt19937_64 rng(21);
  const auto g = oracle::random_graph(60, 0.1, rng);
  const auto direct = ppr_diffusion(g, 0.2);
  const auto series = ppr_diffusion(g, 0.2, {.direct_solve_limit = 10, .series_tolerance = 1e-6});
  // Tail of the series is bounded by the spectral-radius argument.
  CHECK((direct - series).cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("sparsify keeps entries above the threshold") {
  DenseMatrix u(2, 2);
  u << 0.5, 1e-5, 0.0, -0.3;
  const auto all = sparsify_dense(u, 0.0);
  CHECK(all.nnz() == 3);
  const auto cut = sparsify_dense(u, 1e-4);
  CHECK(cut.nnz() == 2);
  CHECK(cut.weight(1, 1) == -0.3);
}

TEST_CASE("feature dropout") {
  std::mt19937_64 rng(1);
  const DenseMatrix x = oracle::random_matrix(20, 5, rng);
  CHECK(feature_dropout(x, 0.0, 9) == x);
  CHECK(feature_dropout(x, 0.3, 9, 4, 1) == feature_dropout(x, 0.3, 9, 4, 1));
  CHECK(feature_dropout(x, 0.3, 9, 4, 1) != feature_dropout(x, 0.3, 9, 4, 0));
  CHECK(feature_dropout(x, 0.3, 9, 4, 1) != feature_dropout(x, 0.3, 9, 5, 1));
  CHECK_THROWS_AS(feature_dropout(x, 1.0, 9), ContractError);

  const DenseMatrix big = DenseMatrix::Ones(1000, 1000);
  const auto dropped = feature_dropout(big, 0.5, 123);
  const double zero_fraction = 1.0 - dropped.sum() / 1e6;
  CHECK(std::abs(zero_fraction - 0.5) < 0.01);

  // Shape preserved; every entry is either the original value or zero.
  const auto d = feature_dropout(x, 0.4, 5);
  CHECK(d.rows() == x.rows());
  CHECK(d.cols() == x.cols());
  for (Eigen::Index i = 0; i < x.size(); ++i) CHECK((d.data()[i] == x.data()[i] || d.data()[i] == 0.0));
}

TEST_CASE("build_views composes adjacency, diffusion and shared semantic graphs") {
  std::mt19937_64 rng(2);
  const auto g = oracle::random_graph(5, 0.6, rng);
  const DenseMatrix x = oracle::random_matrix(5, 3, rng);
  SemanticGraphSet sg;
  sg.graphs = {SparseGraph::from_triplets(5, {{0, 1, 0.5}}), SparseGraph::from_triplets(5, {{2, 3, -0.5}})};
  sg.k = 1;
  const ViewOptions opts;
  const auto [first, second] = build_views(g, x, sg, opts, 77);
  REQUIRE(first.structures.size() == 3);
  REQUIRE(second.structures.size() == 3);
  CHECK(first.structures[0] == g);
  CHECK((second.structures[0].to_dense() - oracle::ppr_inverse(g, 0.2)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(first.structures[1] == second.structures[1]);
  CHECK(first.structures[2] == sg.graphs[1]);
  CHECK(first.features == feature_dropout(x, 0.2, 77, 0, 0));
  CHECK(second.features == feature_dropout(x, 0.2, 77, 0, 1));

  SemanticGraphSet none;
  const auto [a, b] = build_views(g, x, none, opts, 77);
  CHECK(a.structures.size() == 1);
  CHECK(b.structures.size() == 1);
}

TEST_CASE("dense binary round trip") {
  Scratch s("dense_bin");
  std::mt19937_64 rng(6);
  const DenseMatrix m = oracle::random_matrix(9, 4, rng);
  write_dense_binary(m, s.path("m.bin"));
  CHECK(read_dense_binary(s.path("m.bin")) == m);
  CHECK_THROWS_AS(read_dense_binary(s.write("bad.bin", "nope")), ParseError);
}

TEST_CASE("edge dropout removes entries only") {
  std::mt19937_64 rng(10);
  const auto g = oracle::random_graph(30, 0.3, rng);
  const auto d = edge_dropout(g, 0.5, 1, 0, 0);
  CHECK(d.nnz() < g.nnz());
  for (const auto& t : d.to_triplets()) CHECK(g.weight(t.row, t.col) == t.value);
  CHECK(edge_dropout(g, 0.0, 1, 0, 0) == g);
}
