#include "fsgcl/pipeline.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "fsgcl/error.hpp"
#include "fsgcl/rng.hpp"
#include "fsgcl/semantic.hpp"
#include "fsgcl/views.hpp"

namespace fsgcl {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Reads typed keys out of one JSON object and rejects the ones never asked for.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(path_ + "." + key + ": wrong type");
    }
  }

  const json* child(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  void finish() const {
    for (const auto& item : j_.items())
      if (!seen_.count(item.key())) throw ConfigError("unknown configuration key '" + path_ + "." + item.key() + "'");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

MotifPattern parse_motif(const json& j) {
  if (j.is_string()) {
    try {
      return MotifPattern::builtin(j.get<std::string>());
    } catch (const ContractError& e) {
      throw ConfigError(e.what());
    }
  }
  Section s(j, "motifs[]");
  MotifPattern p;
  s.get("name", p.name);
  s.get("num_nodes", p.num_nodes);
  s.get("edges", p.edges);
  s.finish();
  try {
    p.validate();
  } catch (const ContractError& e) {
    throw ConfigError("motif '" + p.name + "': " + e.what());
  }
  return p;
}

std::vector<double> default_motif_weights(std::size_t t) {
  if (t == 3) return {0.7, 0.1, 0.2};
  return std::vector<double>(t, t ? 1.0 / static_cast<double>(t) : 0.0);
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

json manifest(const PipelineConfig& cfg, const std::string& command, const json& outputs) {
  json m;
  m["command"] = command;
  m["config_hash"] = config_hash(cfg);
  m["seed"] = cfg.seed;
  m["version"] = kVersion;
  m["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
               std::to_string(EIGEN_MINOR_VERSION);
  m["outputs"] = outputs;
  return m;
}

void write_manifest(const fs::path& dir, const json& m) {
  std::ofstream out(dir / "manifest.json", std::ios::trunc);
  if (!out) throw InputError("cannot write " + (dir / "manifest.json").string());
  out << m.dump(2) << '\n';
}

// True when the stage already ran with this configuration.
bool up_to_date(const fs::path& dir, const PipelineConfig& cfg) {
  std::ifstream in(dir / "manifest.json");
  if (!in) return false;
  try {
    const json m = json::parse(in);
    if (m.at("config_hash").get<std::string>() != config_hash(cfg)) return false;
    for (const auto& f : m.at("outputs"))
      if (!fs::exists(dir / f.get<std::string>())) return false;
    return true;
  } catch (const json::exception&) {
    return false;
  }
}

std::ostream& log_stream(const CommandOptions& opts) { return opts.log ? *opts.log : std::clog; }

std::string motif_file(std::size_t i, const MotifPattern& p, const char* prefix) {
  return std::string(prefix) + "_" + std::to_string(i) + "_" + p.name + ".edges";
}

CommandOptions upstream(const CommandOptions& opts) { return {false, opts.log}; }

TrainConfig effective_train(const PipelineConfig& cfg, const AblationFlags& flags) {
  TrainConfig t = cfg.train;
  t.k = cfg.k;
  t.seed = cfg.seed;
  t.ablation = flags;
  return t;
}

std::vector<EvalSummary> run_evaluation(const DenseMatrix& z, const LabelSet& labels, const EvalConfig& eval,
                                        std::uint64_t seed, const fs::path* heatmap_path) {
  if (eval.mode == "logistic") {
    const auto primary = labels.primary();
    RepeatedAccuracy acc;
    for (std::size_t r = 0; r < eval.repeats; ++r) {
      const Split split = make_splits(primary.size(), derive_seed(seed, {0xE7A1u, r}), eval.train_fraction,
                                      eval.val_fraction);
      acc.runs.push_back(logistic_eval(z, primary, split).test_accuracy);
    }
    double mean = 0.0, var = 0.0;
    for (double a : acc.runs) mean += a / static_cast<double>(acc.runs.size());
    for (double a : acc.runs) var += (a - mean) * (a - mean) / static_cast<double>(acc.runs.size());
    return {{"accuracy", mean, std::sqrt(var)}};
  }
  MlknnOptions opts{eval.k_nn, eval.smoothing,
                    eval.heatmap_score == "recall" ? HeatmapScore::kLabelRecall : HeatmapScore::kExactSet};
  std::vector<double> off, diag, exact;
  DenseMatrix heat_sum, heat_count;
  for (std::size_t r = 0; r < eval.repeats; ++r) {
    const Split split = make_splits(labels.size(), derive_seed(seed, {0xE7A1u, r}), eval.train_fraction,
                                    eval.val_fraction);
    const MlknnResult res = mlknn_eval(z, labels, split, opts);
    off.push_back(mean_off_diagonal(res.heatmap));
    diag.push_back(mean_diagonal(res.heatmap));
    exact.push_back(res.exact_match);
    if (r == 0) {
      heat_sum = DenseMatrix::Zero(res.heatmap.rows(), res.heatmap.cols());
      heat_count = heat_sum;
    }
    for (Eigen::Index i = 0; i < res.heatmap.size(); ++i)
      if (!std::isnan(res.heatmap.data()[i])) {
        heat_sum.data()[i] += res.heatmap.data()[i];
        heat_count.data()[i] += 1.0;
      }
  }
  if (heatmap_path && eval.repeats > 0) {
    HeatmapMatrix h = heat_sum.cwiseQuotient(heat_count);
    write_heatmap_csv(h, *heatmap_path);
  }
  auto summarize = [](const std::string& name, const std::vector<double>& v) {
    double mean = 0.0, var = 0.0;
    std::size_t count = 0;
    for (double a : v)
      if (!std::isnan(a)) {
        mean += a;
        ++count;
      }
    mean = count ? mean / static_cast<double>(count) : std::numeric_limits<double>::quiet_NaN();
    for (double a : v)
      if (!std::isnan(a)) var += (a - mean) * (a - mean);
    return EvalSummary{name, mean, count ? std::sqrt(var / static_cast<double>(count)) : 0.0};
  };
  return {summarize("offdiag_exact_match", off), summarize("diag_exact_match", diag),
          summarize("exact_match", exact)};
}

void write_summaries(const std::vector<EvalSummary>& rows, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  out << "metric,mean,std\n";
  for (const auto& r : rows) out << r.metric << ',' << format_double(r.mean) << ',' << format_double(r.std) << '\n';
}

}  // namespace

void PipelineConfig::validate() const {
  if (dataset.source != "synthetic" && dataset.source != "files")
    throw ConfigError("dataset.source must be 'synthetic' or 'files'");
  if (dataset.source == "files" && (dataset.edges.empty() || dataset.features.empty()))
    throw ConfigError("dataset.edges and dataset.features are required for source 'files'");
  if (dataset.source == "synthetic") synthetic.validate();
  if (motifs.empty()) throw ConfigError("at least one motif is required");
  for (const auto& m : motifs) m.validate();
  if (k == 0) throw ConfigError("semantic.k must be >= 1");
  if (!(ppr_alpha > 0.0 && ppr_alpha < 1.0)) throw ConfigError("views.ppr_alpha must lie in (0, 1)");
  if (train.model.motif_weights.size() != motifs.size())
    throw ConfigError("model.motif_weights needs one entry per motif");
  if (train.model.hidden_dim == 0 || train.model.gcn_layers == 0 || train.model.predictor_layers == 0)
    throw ConfigError("model dimensions and layer counts must be positive");
  train.validate();
  if (eval.mode != "logistic" && eval.mode != "mlknn") throw ConfigError("eval.mode must be 'logistic' or 'mlknn'");
  if (eval.heatmap_score != "exact" && eval.heatmap_score != "recall")
    throw ConfigError("eval.heatmap_score must be 'exact' or 'recall'");
  if (eval.k_nn == 0 || eval.repeats == 0) throw ConfigError("eval.k_nn and eval.repeats must be positive");
}

PipelineConfig parse_config(const std::string& json_text, const std::string& source) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(source, 0, e.what());
  }
  PipelineConfig cfg;
  Section top(root, "");
  std::string out_dir = cfg.out_dir.string();
  top.get("seed", cfg.seed);
  top.get("out_dir", out_dir);
  top.get("workers", cfg.workers);
  cfg.out_dir = out_dir;

  if (const json* j = top.child("dataset")) {
    Section s(*j, "dataset");
    s.get("source", cfg.dataset.source);
    s.get("edges", cfg.dataset.edges);
    s.get("features", cfg.dataset.features);
    s.get("labels", cfg.dataset.labels);
    s.get("num_nodes", cfg.dataset.num_nodes);
    s.finish();
  }
  if (const json* j = top.child("synthetic")) {
    Section s(*j, "synthetic");
    auto& c = cfg.synthetic;
    s.get("n", c.n);
    s.get("avg_degree", c.avg_degree);
    s.get("max_degree", c.max_degree);
    s.get("mu", c.mu);
    s.get("minc", c.minc);
    s.get("maxc", c.maxc);
    s.get("overlap_nodes", c.overlap_nodes);
    s.get("memberships", c.memberships);
    s.get("num_communities", c.num_communities);
    s.get("degree_exponent", c.degree_exponent);
    s.get("feature_noise", c.feature_noise);
    s.get("noise_dim", c.noise_dim);
    s.get("max_retries", c.max_retries);
    s.finish();
  }
  if (const json* j = top.child("motifs")) {
    if (!j->is_array()) throw ConfigError("motifs: expected an array");
    cfg.motifs.clear();
    for (const auto& m : *j) cfg.motifs.push_back(parse_motif(m));
  }
  if (const json* j = top.child("semantic")) {
    Section s(*j, "semantic");
    s.get("k", cfg.k);
    s.finish();
  }
  if (const json* j = top.child("views")) {
    Section s(*j, "views");
    s.get("ppr_alpha", cfg.ppr_alpha);
    s.get("drop_rate", cfg.train.drop_rate);
    s.get("sparsify_threshold", cfg.sparsify_threshold);
    s.get("direct_solve_limit", cfg.direct_solve_limit);
    s.get("resample_augmentation", cfg.train.resample_augmentation);
    s.get("perturb_semantic_edges", cfg.train.perturb_semantic_edges);
    s.finish();
  }
  bool weights_given = false;
  if (const json* j = top.child("model")) {
    Section s(*j, "model");
    auto& m = cfg.train.model;
    s.get("hidden_dim", m.hidden_dim);
    s.get("gcn_layers", m.gcn_layers);
    s.get("predictor_layers", m.predictor_layers);
    s.get("beta", m.beta);
    s.get("prelu_init", m.prelu_init);
    weights_given = j->contains("motif_weights");
    s.get("motif_weights", m.motif_weights);
    s.finish();
  }
  if (!weights_given) cfg.train.model.motif_weights = default_motif_weights(cfg.motifs.size());
  if (const json* j = top.child("train")) {
    Section s(*j, "train");
    auto& t = cfg.train;
    s.get("gamma", t.gamma);
    s.get("tau", t.tau);
    s.get("base_lr", t.base_lr);
    s.get("warmup_steps", t.warmup_steps);
    s.get("total_steps", t.total_steps);
    s.get("weight_decay", t.weight_decay);
    s.get("adam_beta1", t.adam_beta1);
    s.get("adam_beta2", t.adam_beta2);
    s.get("adam_eps", t.adam_eps);
    s.get("nce_temperature", t.nce_temperature);
    s.finish();
  }
  if (const json* j = top.child("ablation")) {
    Section s(*j, "ablation");
    auto& a = cfg.train.ablation;
    s.get("no_slow", a.no_slow);
    s.get("no_semantic_graphs", a.no_semantic_graphs);
    s.get("topk_only", a.topk_only);
    s.get("no_semantic_loss", a.no_semantic_loss);
    s.get("no_holistic_loss", a.no_holistic_loss);
    s.get("uniform_weights", a.uniform_weights);
    s.finish();
  }
  if (const json* j = top.child("eval")) {
    Section s(*j, "eval");
    auto& e = cfg.eval;
    s.get("mode", e.mode);
    s.get("k_nn", e.k_nn);
    s.get("smoothing", e.smoothing);
    s.get("heatmap_score", e.heatmap_score);
    s.get("repeats", e.repeats);
    s.get("train_fraction", e.train_fraction);
    s.get("val_fraction", e.val_fraction);
    s.finish();
  }
  top.finish();
  cfg.train.k = cfg.k;
  set_seed(cfg, cfg.seed);
  cfg.validate();
  return cfg;
}

PipelineConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  PipelineConfig cfg = parse_config(buf.str(), path.string());
  // Relative dataset paths are resolved against the config's directory.
  const fs::path base = path.parent_path();
  for (std::string* p : {&cfg.dataset.edges, &cfg.dataset.features, &cfg.dataset.labels})
    if (!p->empty() && fs::path(*p).is_relative()) *p = (base / *p).lexically_normal().string();
  return cfg;
}

namespace {

json config_json(const PipelineConfig& cfg, bool with_out_dir) {
  json j;
  j["seed"] = cfg.seed;
  if (with_out_dir) j["out_dir"] = cfg.out_dir.string();
  j["workers"] = cfg.workers;
  j["dataset"] = {{"source", cfg.dataset.source},
                  {"edges", cfg.dataset.edges},
                  {"features", cfg.dataset.features},
                  {"labels", cfg.dataset.labels},
                  {"num_nodes", cfg.dataset.num_nodes}};
  const auto& c = cfg.synthetic;
  j["synthetic"] = {{"n", c.n},
                    {"avg_degree", c.avg_degree},
                    {"max_degree", c.max_degree},
                    {"mu", c.mu},
                    {"minc", c.minc},
                    {"maxc", c.maxc},
                    {"overlap_nodes", c.overlap_nodes},
                    {"memberships", c.memberships},
                    {"num_communities", c.num_communities},
                    {"degree_exponent", c.degree_exponent},
                    {"feature_noise", c.feature_noise},
                    {"noise_dim", c.noise_dim},
                    {"max_retries", c.max_retries}};
  j["motifs"] = json::array();
  for (const auto& m : cfg.motifs)
    j["motifs"].push_back({{"name", m.name}, {"num_nodes", m.num_nodes}, {"edges", m.edges}});
  j["semantic"] = {{"k", cfg.k}};
  j["views"] = {{"ppr_alpha", cfg.ppr_alpha},
                {"drop_rate", cfg.train.drop_rate},
                {"sparsify_threshold", cfg.sparsify_threshold},
                {"direct_solve_limit", cfg.direct_solve_limit},
                {"resample_augmentation", cfg.train.resample_augmentation},
                {"perturb_semantic_edges", cfg.train.perturb_semantic_edges}};
  const auto& m = cfg.train.model;
  j["model"] = {{"hidden_dim", m.hidden_dim},         {"gcn_layers", m.gcn_layers},
                {"predictor_layers", m.predictor_layers}, {"beta", m.beta},
                {"prelu_init", m.prelu_init},         {"motif_weights", m.motif_weights}};
  const auto& t = cfg.train;
  j["train"] = {{"gamma", t.gamma},           {"tau", t.tau},
                {"base_lr", t.base_lr},       {"warmup_steps", t.warmup_steps},
                {"total_steps", t.total_steps}, {"weight_decay", t.weight_decay},
                {"adam_beta1", t.adam_beta1}, {"adam_beta2", t.adam_beta2},
                {"adam_eps", t.adam_eps},     {"nce_temperature", t.nce_temperature}};
  const auto& a = t.ablation;
  j["ablation"] = {{"no_slow", a.no_slow},
                   {"no_semantic_graphs", a.no_semantic_graphs},
                   {"topk_only", a.topk_only},
                   {"no_semantic_loss", a.no_semantic_loss},
                   {"no_holistic_loss", a.no_holistic_loss},
                   {"uniform_weights", a.uniform_weights}};
  const auto& e = cfg.eval;
  j["eval"] = {{"mode", e.mode},
               {"k_nn", e.k_nn},
               {"smoothing", e.smoothing},
               {"heatmap_score", e.heatmap_score},
               {"repeats", e.repeats},
               {"train_fraction", e.train_fraction},
               {"val_fraction", e.val_fraction}};
  return j;
}

}  // namespace

std::string dump_config(const PipelineConfig& cfg) { return config_json(cfg, true).dump(2); }

std::string config_hash(const PipelineConfig& cfg) {
  const std::string text = config_json(cfg, false).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return hex64(h);
}

void set_seed(PipelineConfig& cfg, std::uint64_t seed) {
  cfg.seed = seed;
  cfg.train.seed = seed;
  cfg.synthetic.seed = seed;
}

LoadedData load_dataset(const PipelineConfig& cfg) {
  LoadedData d;
  if (cfg.dataset.source == "synthetic") {
    const RunLayout run{cfg.out_dir};
    d.features = load_features(run.data() / "features.csv");
    d.graph = load_edge_list(run.data() / "graph.edges", static_cast<std::size_t>(d.features.rows()));
    d.labels = load_labels(run.data() / "labels.csv");
    return d;
  }
  d.features = load_features(cfg.dataset.features);
  const std::size_t n = cfg.dataset.num_nodes ? cfg.dataset.num_nodes : static_cast<std::size_t>(d.features.rows());
  if (static_cast<std::size_t>(d.features.rows()) != n)
    throw InputError("feature file has " + std::to_string(d.features.rows()) + " rows, expected " + std::to_string(n));
  d.graph = load_edge_list(cfg.dataset.edges, n);
  if (!cfg.dataset.labels.empty()) {
    d.labels = load_labels(cfg.dataset.labels);
    if (d.labels->size() != n) throw InputError("label file does not cover every node");
  }
  return d;
}

void cmd_synth(const PipelineConfig& cfg, CommandOptions opts) {
  if (cfg.dataset.source != "synthetic") throw ConfigError("synth requires dataset.source = 'synthetic'");
  const RunLayout run{cfg.out_dir};
  if (!opts.force && up_to_date(run.data(), cfg)) return;
  fs::create_directories(run.data());
  const SynthData data = generate(cfg.synthetic);
  write_edge_list(data.graph, run.data() / "graph.edges", true, false);
  write_matrix_csv(data.features, run.data() / "features.csv");
  write_labels(data.labels, run.data() / "labels.csv");
  log_stream(opts) << "synth: " << data.graph.num_nodes() << " nodes, " << data.graph.nnz() / 2 << " edges\n";
  write_manifest(run.data(), manifest(cfg, "synth", {"graph.edges", "features.csv", "labels.csv"}));
}

std::vector<std::size_t> cmd_mine(const PipelineConfig& cfg, CommandOptions opts) {
  if (cfg.dataset.source == "synthetic") cmd_synth(cfg, upstream(opts));
  const RunLayout run{cfg.out_dir};
  const fs::path dir = run.mine();
  std::vector<std::size_t> counts;
  if (!opts.force && up_to_date(dir, cfg)) {
    std::ifstream in(dir / "counts.csv");
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) counts.push_back(std::stoull(line.substr(line.rfind(',') + 1)));
  } else {
    fs::create_directories(dir);
    const LoadedData data = load_dataset(cfg);
    json outputs = json::array({"counts.csv"});
    std::ofstream report(dir / "counts.csv", std::ios::trunc);
    report << "motif,instances\n";
    for (std::size_t i = 0; i < cfg.motifs.size(); ++i) {
      const auto& p = cfg.motifs[i];
      const InstanceSet s = enumerate_instances(data.graph, p, {cfg.workers});
      const SparseGraph o = cooccurrence(s, data.graph.num_nodes());
      const std::string file = motif_file(i, p, "cooc");
      write_edge_list(o, dir / file, true, true);
      outputs.push_back(file);
      report << p.name << ',' << s.size() << '\n';
      counts.push_back(s.size());
    }
    report.close();
    write_manifest(dir, manifest(cfg, "mine", outputs));
  }
  for (std::size_t i = 0; i < cfg.motifs.size(); ++i) log_stream(opts) << cfg.motifs[i].name << ": " << counts[i] << '\n';
  return counts;
}

void cmd_preprocess(const PipelineConfig& cfg, CommandOptions opts) {
  cmd_mine(cfg, upstream(opts));
  const RunLayout run{cfg.out_dir};
  const fs::path dir = run.preprocess();
  if (!opts.force && up_to_date(dir, cfg)) return;
  fs::create_directories(dir);
  const LoadedData data = load_dataset(cfg);
  const std::size_t n = data.graph.num_nodes();
  json outputs = json::array();
  for (std::size_t i = 0; i < cfg.motifs.size(); ++i) {
    const SparseGraph o = load_edge_list(run.mine() / motif_file(i, cfg.motifs[i], "cooc"), n);
    const SparseGraph sg = topk_rows(masked_cosine(data.features, nonzero_mask(o)), cfg.k);
    if (sg.nnz() == 0) log_stream(opts) << "warning: semantic graph for motif '" << cfg.motifs[i].name << "' is empty\n";
    const std::string file = motif_file(i, cfg.motifs[i], "semantic");
    write_edge_list(sg, dir / file, false, true);
    outputs.push_back(file);
  }
  write_dense_binary(ppr_diffusion(data.graph, cfg.ppr_alpha, {cfg.direct_solve_limit, 1e-6}), dir / "ppr.bin");
  outputs.push_back("ppr.bin");
  write_manifest(dir, manifest(cfg, "preprocess", outputs));
}

std::vector<SparseGraph> load_semantic_graphs(const PipelineConfig& cfg, std::size_t num_nodes) {
  const RunLayout run{cfg.out_dir};
  std::vector<SparseGraph> out;
  for (std::size_t i = 0; i < cfg.motifs.size(); ++i)
    out.push_back(load_edge_list(run.preprocess() / motif_file(i, cfg.motifs[i], "semantic"), num_nodes,
                                 {.symmetrize = false, .drop_self_loops = false}));
  return out;
}

SparseGraph load_diffusion(const PipelineConfig& cfg) {
  const RunLayout run{cfg.out_dir};
  const DenseMatrix u = read_dense_binary(run.preprocess() / "ppr.bin");
  const bool exact = static_cast<std::size_t>(u.rows()) <= cfg.direct_solve_limit;
  return sparsify_dense(u, exact ? 0.0 : cfg.sparsify_threshold);
}

void cmd_train(const PipelineConfig& cfg, CommandOptions opts) {
  cmd_preprocess(cfg, upstream(opts));
  const RunLayout run{cfg.out_dir};
  const fs::path dir = run.train();
  if (!opts.force && up_to_date(dir, cfg)) return;
  fs::create_directories(dir);
  const LoadedData data = load_dataset(cfg);
  const auto semantic = load_semantic_graphs(cfg, data.graph.num_nodes());
  const SparseGraph diffusion = load_diffusion(cfg);
  const TrainResult result =
      train(data.graph, diffusion, data.features, semantic, effective_train(cfg, cfg.train.ablation));
  write_matrix_csv(result.embeddings, dir / "embeddings.csv");
  write_trace_csv(result.trace, dir / "trace.csv");
  const std::string extra = json{{"config_hash", config_hash(cfg)}, {"seed", cfg.seed}}.dump();
  save_params(result.online.store(), dir / "online.bin", extra);
  save_params(result.target.store(), dir / "target.bin", extra);
  if (!result.trace.empty())
    log_stream(opts) << "train: final loss " << format_double(result.trace.back().loss.total) << '\n';
  write_manifest(dir, manifest(cfg, "train", {"embeddings.csv", "trace.csv", "online.bin", "target.bin"}));
}

std::vector<EvalSummary> evaluate_files(const fs::path& embeddings, const fs::path& labels, const EvalConfig& eval,
                                        std::uint64_t seed, const fs::path& out_dir) {
  const DenseMatrix z = load_features(embeddings);
  const LabelSet l = load_labels(labels);
  if (l.size() != static_cast<std::size_t>(z.rows()))
    throw InputError("embeddings have " + std::to_string(z.rows()) + " rows but labels cover " +
                     std::to_string(l.size()) + " nodes");
  fs::create_directories(out_dir);
  const fs::path heatmap = out_dir / "heatmap.csv";
  auto rows = run_evaluation(z, l, eval, seed, eval.mode == "mlknn" ? &heatmap : nullptr);
  write_summaries(rows, out_dir / "results.csv");
  return rows;
}

std::vector<EvalSummary> cmd_eval(const PipelineConfig& cfg, CommandOptions opts) {
  cmd_train(cfg, upstream(opts));
  const RunLayout run{cfg.out_dir};
  const fs::path labels =
      cfg.dataset.source == "synthetic" ? run.data() / "labels.csv" : fs::path(cfg.dataset.labels);
  if (labels.empty()) throw ConfigError("eval requires dataset.labels");
  auto rows = evaluate_files(run.train() / "embeddings.csv", labels, cfg.eval, cfg.seed, run.eval());
  json outputs = json::array({"results.csv"});
  if (cfg.eval.mode == "mlknn") outputs.push_back("heatmap.csv");
  write_manifest(run.eval(), manifest(cfg, "eval", outputs));
  for (const auto& r : rows)
    log_stream(opts) << r.metric << ": " << format_double(r.mean) << " +- " << format_double(r.std) << '\n';
  return rows;
}

std::vector<std::string> ablation_variants() {
  return {"FSGCL", "w/o w_i^m", "w/o slow", "w/o A^SG", "w/o top-k A^SG", "w/o L_Semantic", "w/o L_Holistic"};
}

AblationFlags ablation_flags(const std::string& variant) {
  AblationFlags f;
  if (variant == "FSGCL") return f;
  if (variant == "w/o w_i^m") f.uniform_weights = true;
  else if (variant == "w/o slow") f.no_slow = true;
  else if (variant == "w/o A^SG") f.no_semantic_graphs = true;
  else if (variant == "w/o top-k A^SG") f.topk_only = true;
  else if (variant == "w/o L_Semantic") f.no_semantic_loss = true;
  else if (variant == "w/o L_Holistic") f.no_holistic_loss = true;
  else throw ConfigError("unknown ablation variant '" + variant + "'");
  return f;
}

std::vector<AblationRow> cmd_ablate(const PipelineConfig& cfg, CommandOptions opts) {
  cmd_preprocess(cfg, upstream(opts));
  const RunLayout run{cfg.out_dir};
  const fs::path dir = run.ablate();
  fs::create_directories(dir);
  const LoadedData data = load_dataset(cfg);
  if (!data.labels) throw ConfigError("ablate requires labels");
  const auto semantic = load_semantic_graphs(cfg, data.graph.num_nodes());
  const SparseGraph diffusion = load_diffusion(cfg);

  std::vector<AblationRow> rows;
  for (const auto& variant : ablation_variants()) {
    const TrainResult result =
        train(data.graph, diffusion, data.features, semantic, effective_train(cfg, ablation_flags(variant)));
    const auto summary = run_evaluation(result.embeddings, *data.labels, cfg.eval, cfg.seed, nullptr);
    rows.push_back({variant, summary.front()});
    log_stream(opts) << variant << ": " << format_double(summary.front().mean) << '\n';
  }
  std::ofstream out(dir / "ablation.csv", std::ios::trunc);
  out << "variant,metric,mean,std\n";
  for (const auto& r : rows)
    out << r.variant << ',' << r.result.metric << ',' << format_double(r.result.mean) << ','
        << format_double(r.result.std) << '\n';
  out.close();
  write_manifest(dir, manifest(cfg, "ablate", {"ablation.csv"}));
  return rows;
}

}  // namespace fsgcl
