#include <doctest.h>

#include <sstream>

#include "fsgcl/error.hpp"
#include "fsgcl/pipeline.hpp"
#include "fsgcl/semantic.hpp"
#include "scratch.hpp"

using namespace fsgcl;
namespace fs = std::filesystem;

namespace {

const char* kToy = R"({
  "seed": 0,
  "synthetic": {"n": 200, "avg_degree": 8, "max_degree": 20, "minc": 60, "maxc": 90,
                "overlap_nodes": 100, "num_communities": 4, "noise_dim": 4},
  "semantic": {"k": 5},
  "model": {"hidden_dim": 16},
  "train": {"total_steps": 20, "warmup_steps": 5},
  "eval": {"mode": "mlknn", "repeats": 2}
})";

PipelineConfig toy(const Scratch& s) {
  auto cfg = parse_config(kToy);
  cfg.out_dir = s.path("run");
  return cfg;
}

// Config reading a hand-written graph from files.
PipelineConfig from_files(Scratch& s, const std::string& edges, std::size_t n) {
  std::string features;
  for (std::size_t i = 0; i < n; ++i) features += std::to_string(i) + ",1\n";
  auto cfg = parse_config(R"({"dataset": {"source": "files", "edges": "x", "features": "y"},
                              "motifs": ["triangle"]})");
  cfg.dataset.edges = s.write("g.edges", edges).string();
  cfg.dataset.features = s.write("x.csv", features).string();
  cfg.out_dir = s.path("run");
  return cfg;
}

std::ostringstream sink;
const CommandOptions kQuiet{false, &sink};

}  // namespace

TEST_CASE("config defaults and key checking") {
  const auto cfg = parse_config("{}");
  CHECK(cfg.seed == 0);
  CHECK(cfg.k == 5);
  CHECK(cfg.motifs.size() == 3);
  CHECK(cfg.train.model.motif_weights == std::vector<double>{0.7, 0.1, 0.2});
  CHECK(cfg.train.tau == 0.99);
  CHECK(cfg.eval.mode == "logistic");

  CHECK_THROWS_AS(parse_config(R"({"sead": 1})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"train": {"lr": 1}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"train": {"tau": "high"}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"train": {"tau": 2}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"motifs": ["hexagon"]})"), ConfigError);
  CHECK_THROWS_AS(parse_config("{not json"), ParseError);

  const auto two = parse_config(R"({"motifs": ["triangle", {"name": "path3", "num_nodes": 3, "edges": [[0,1],[1,2]]}]})");
  REQUIRE(two.motifs.size() == 2);
  CHECK(two.motifs[1].name == "path3");
  CHECK(two.train.model.motif_weights == std::vector<double>{0.5, 0.5});
}

TEST_CASE("config hash") {
  const auto a = parse_config(kToy);
  auto b = parse_config(kToy);
  CHECK(config_hash(a) == config_hash(b));
  b.out_dir = "elsewhere";
  CHECK(config_hash(a) == config_hash(b));
  set_seed(b, 9);
  CHECK(config_hash(a) != config_hash(b));
  CHECK(b.train.seed == 9);
  CHECK(b.synthetic.seed == 9);
  // Dumped config parses back to the same hash.
  CHECK(config_hash(parse_config(dump_config(a))) == config_hash(a));
}

TEST_CASE("load_config resolves dataset paths against the config directory") {
  Scratch s("load_config");
  s.write("g.edges", "0 1\n");
  s.write("x.csv", "1\n2\n");
  const auto path = s.write("c.json", R"({"dataset": {"source": "files", "edges": "g.edges", "features": "x.csv"}})");
  const auto cfg = load_config(path);
  CHECK(fs::path(cfg.dataset.edges) == s.path("g.edges"));
  CHECK_THROWS_AS(load_config(s.path("missing.json")), InputError);
}

TEST_CASE("mine counts on small graphs") {
  SUBCASE("triangle") {
    Scratch s("mine_triangle");
    CHECK(cmd_mine(from_files(s, "0 1\n1 2\n0 2\n", 3), kQuiet) == std::vector<std::size_t>{1});
  }
  SUBCASE("K4") {
    Scratch s("mine_k4");
    CHECK(cmd_mine(from_files(s, "0 1\n0 2\n0 3\n1 2\n1 3\n2 3\n", 4), kQuiet) == std::vector<std::size_t>{4});
    CHECK(slurp(s.path("run/mine/counts.csv")) == "motif,instances\ntriangle,4\n");
    CHECK(fs::exists(s.path("run/mine/cooc_0_triangle.edges")));
    CHECK(fs::exists(s.path("run/mine/manifest.json")));
  }
  SUBCASE("empty graph") {
    Scratch s("mine_empty");
    CHECK(cmd_mine(from_files(s, "", 5), kQuiet) == std::vector<std::size_t>{0});
  }
  SUBCASE("out-of-range ids") {
    Scratch s("mine_bad");
    CHECK_THROWS_AS(cmd_mine(from_files(s, "0 7\n", 3), kQuiet), InputError);
  }
}

TEST_CASE("preprocess writes semantic graphs equal to the in-memory construction") {
  Scratch s("preprocess");
  auto cfg = toy(s);
  cmd_preprocess(cfg, kQuiet);
  const auto data = load_dataset(cfg);
  const auto files = load_semantic_graphs(cfg, data.graph.num_nodes());
  const auto memory = build_semantic_graphs(data.graph, data.features, cfg.motifs, cfg.k);
  REQUIRE(files.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(files[i] == memory.graphs[i]);
    for (NodeId u = 0; u < files[i].num_nodes(); ++u) CHECK(files[i].degree(u) <= cfg.k);
  }
  CHECK((load_diffusion(cfg).to_dense() - ppr_diffusion(data.graph, 0.2)).cwiseAbs().maxCoeff() == 0.0);

  // A forced rerun is byte-identical; an unforced one is skipped.
  const auto before = slurp(s.path("run/preprocess/semantic_0_triangle.edges"));
  const auto ppr = slurp(s.path("run/preprocess/ppr.bin"));
  cmd_preprocess(cfg, {true, &sink});
  CHECK(slurp(s.path("run/preprocess/semantic_0_triangle.edges")) == before);
  CHECK(slurp(s.path("run/preprocess/ppr.bin")) == ppr);
  const auto stamp = fs::last_write_time(s.path("run/preprocess/ppr.bin"));
  cmd_preprocess(cfg, kQuiet);
  CHECK(fs::last_write_time(s.path("run/preprocess/ppr.bin")) == stamp);
}

TEST_CASE("k = n keeps every nonzero masked cosine") {
  Scratch s("preprocess_full");
  auto cfg = toy(s);
  cfg.k = 200;
  cmd_preprocess(cfg, kQuiet);
  const auto data = load_dataset(cfg);
  const auto files = load_semantic_graphs(cfg, 200);
  for (std::size_t i = 0; i < cfg.motifs.size(); ++i) {
    const auto mask = nonzero_mask(cooccurrence(enumerate_instances(data.graph, cfg.motifs[i]), 200));
    std::size_t nonzero = 0;
    for (const auto& t : masked_cosine(data.features, mask).to_triplets())
      if (t.value != 0.0) {
        ++nonzero;
        CHECK(files[i].weight(t.row, t.col) == t.value);
      }
    CHECK(files[i].nnz() == nonzero);
  }
}

TEST_CASE("file-based training matches in-memory training") {
  Scratch s("train_match");
  auto cfg = toy(s);
  cmd_train(cfg, kQuiet);
  const auto data = load_dataset(cfg);
  const auto sg = build_semantic_graphs(data.graph, data.features, cfg.motifs, cfg.k);
  TrainConfig t = cfg.train;
  t.k = cfg.k;
  const auto r = train(data.graph, data.features, sg, t, cfg.ppr_alpha);
  const DenseMatrix z = load_features(s.path("run/train/embeddings.csv"));
  CHECK(z == r.embeddings);
  for (const char* f : {"trace.csv", "online.bin", "target.bin", "manifest.json"})
    CHECK(fs::exists(s.path("run/train") / f));
  const auto saved = load_params(s.path("run/train/online.bin"));
  CHECK(saved.values == r.online.store().values);
}

TEST_CASE("evaluation and ablation on the toy benchmark") {
  Scratch s("eval_ablate");
  auto cfg = toy(s);
  const auto rows = cmd_eval(cfg, kQuiet);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].metric == "offdiag_exact_match");
  CHECK(fs::exists(s.path("run/eval/heatmap.csv")));
  CHECK(slurp(s.path("run/eval/results.csv")).rfind("metric,mean,std\n", 0) == 0);

  cfg.train.total_steps = 5;
  cfg.train.warmup_steps = 1;
  const auto ab = cmd_ablate(cfg, kQuiet);
  REQUIRE(ab.size() == 7);
  for (std::size_t i = 0; i < 7; ++i) CHECK(ab[i].variant == ablation_variants()[i]);
  const auto csv = slurp(s.path("run/ablate/ablation.csv"));
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 8);

  auto logistic = cfg;
  logistic.eval.mode = "logistic";
  const auto acc = evaluate_files(s.path("run/train/embeddings.csv"), s.path("run/data/labels.csv"), logistic.eval,
                                  0, s.path("standalone"));
  REQUIRE(acc.size() == 1);
  CHECK(acc[0].metric == "accuracy");
  CHECK(acc[0].mean > 0.0);
  CHECK(acc[0].mean <= 1.0);
}

TEST_CASE("ablation variant names") {
  CHECK(ablation_variants().size() == 7);
  CHECK(ablation_flags("w/o slow").no_slow);
  CHECK(ablation_flags("w/o A^SG").no_semantic_graphs);
  CHECK_THROWS_AS(ablation_flags("w/o everything"), ConfigError);
}
