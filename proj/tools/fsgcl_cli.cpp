#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "fsgcl/error.hpp"
#include "fsgcl/pipeline.hpp"
#include "fsgcl/semantic.hpp"

namespace {

struct GlobalOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool force = false;
};

fsgcl::PipelineConfig resolve(const GlobalOptions& g) {
  fsgcl::PipelineConfig cfg = g.config.empty() ? fsgcl::parse_config("{}") : fsgcl::load_config(g.config);
  if (g.seed) fsgcl::set_seed(cfg, *g.seed);
  if (!g.out.empty()) cfg.out_dir = g.out;
  return cfg;
}

void print_rows(const std::vector<fsgcl::EvalSummary>& rows) {
  for (const auto& r : rows)
    std::cout << r.metric << ',' << fsgcl::format_double(r.mean) << ',' << fsgcl::format_double(r.std) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fine-grained semantics graph contrastive learning pipeline"};
  app.require_subcommand(1);
  GlobalOptions g;
  app.add_option("--config", g.config, "JSON configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Seed override for every stage");
  app.add_option("--out", g.out, "Run directory override");
  app.add_flag("--force", g.force, "Recompute stages whose manifest is current");

  auto* synth = app.add_subcommand("synth", "Generate the overlapping-community benchmark");
  auto* mine = app.add_subcommand("mine", "Enumerate motif instances and co-occurrence counts");
  auto* preprocess = app.add_subcommand("preprocess", "Build semantic graphs and the diffusion matrix");
  auto* train = app.add_subcommand("train", "Train and write embeddings, loss trace and parameters");
  auto* ablate = app.add_subcommand("ablate", "Run the seven component-study variants");

  auto* eval = app.add_subcommand("eval", "Evaluate embeddings");
  std::string embeddings, labels, mode;
  eval->add_option("--embeddings", embeddings, "Embedding CSV (default: the run's trained embeddings)");
  eval->add_option("--labels", labels, "Label CSV");
  eval->add_option("--mode", mode, "logistic or mlknn")->check(CLI::IsMember({"logistic", "mlknn"}));

  auto* semantic = app.add_subcommand("build-semantic", "Write one semantic graph per motif");
  std::size_t k = 0;
  std::vector<std::string> motifs;
  semantic->add_option("--k", k, "Neighbors per node");
  semantic->add_option("--motifs", motifs, "Built-in motif names")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(fsgcl::ErrorCategory::kConfig);
  }

  try {
    fsgcl::PipelineConfig cfg = resolve(g);
    const fsgcl::CommandOptions opts{g.force, &std::cerr};
    if (*synth) {
      fsgcl::cmd_synth(cfg, opts);
    } else if (*mine) {
      const auto counts = fsgcl::cmd_mine(cfg, opts);
      for (std::size_t i = 0; i < counts.size(); ++i) std::cout << cfg.motifs[i].name << ": " << counts[i] << '\n';
    } else if (*preprocess) {
      fsgcl::cmd_preprocess(cfg, opts);
    } else if (*semantic) {
      if (k) cfg.k = cfg.train.k = k;
      if (!motifs.empty()) {
        cfg.motifs.clear();
        for (const auto& name : motifs) cfg.motifs.push_back(fsgcl::MotifPattern::builtin(name));
        cfg.train.model.motif_weights.assign(cfg.motifs.size(), 1.0 / static_cast<double>(cfg.motifs.size()));
      }
      cfg.validate();
      fsgcl::cmd_preprocess(cfg, opts);
      std::cout << (cfg.out_dir / "preprocess").string() << '\n';
    } else if (*train) {
      fsgcl::cmd_train(cfg, opts);
    } else if (*eval) {
      if (!mode.empty()) cfg.eval.mode = mode;
      if (embeddings.empty() != labels.empty())
        throw fsgcl::ConfigError("--embeddings and --labels must be given together");
      if (!embeddings.empty())
        print_rows(fsgcl::evaluate_files(embeddings, labels, cfg.eval, cfg.seed, cfg.out_dir / "eval"));
      else
        print_rows(fsgcl::cmd_eval(cfg, opts));
    } else if (*ablate) {
      std::cout << "variant,metric,mean,std\n";
      for (const auto& row : fsgcl::cmd_ablate(cfg, opts))
        std::cout << row.variant << ',' << row.result.metric << ',' << fsgcl::format_double(row.result.mean) << ','
                  << fsgcl::format_double(row.result.std) << '\n';
    }
  } catch (const fsgcl::Error& e) {
    std::cerr << "error [" << e.category_name() << "]: " << e.what() << '\n';
    return static_cast<int>(e.category());
  } catch (const std::exception& e) {
    std::cerr << "error [internal]: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
