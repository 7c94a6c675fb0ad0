#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fsgcl/evaluation.hpp"
#include "fsgcl/motif.hpp"
#include "fsgcl/synthetic.hpp"
#include "fsgcl/trainer.hpp"

namespace fsgcl {

inline constexpr const char* kVersion = "0.1.0";

struct DatasetConfig {
  /// "synthetic" (generated by the synth stage) or "files".
  std::string source = "synthetic";
  std::string edges;
  std::string features;
  std::string labels;
  /// Node count; 0 takes the feature row count.
  std::size_t num_nodes = 0;
};

struct EvalConfig {
  /// "logistic" or "mlknn".
  std::string mode = "logistic";
  std::size_t k_nn = 10;
  double smoothing = 1.0;
  /// "exact" or "recall".
  std::string heatmap_score = "exact";
  std::size_t repeats = 5;
  double train_fraction = 0.1;
  double val_fraction = 0.1;
};

/// Every tunable of a run. Parsed from JSON; unknown keys are rejected.
struct PipelineConfig {
  std::uint64_t seed = 0;
  std::filesystem::path out_dir = "run";
  unsigned workers = 1;
  DatasetConfig dataset;
  SynthConfig synthetic;
  std::vector<MotifPattern> motifs{MotifPattern::triangle(), MotifPattern::clique4(), MotifPattern::cycle4()};
  std::size_t k = 5;
  double ppr_alpha = 0.2;
  /// Diffusion entries at or below this magnitude are dropped above
  /// `direct_solve_limit` nodes.
  double sparsify_threshold = 1e-4;
  std::size_t direct_solve_limit = 5000;
  /// Training hyperparameters; `train.model.input_dim` is filled from the data.
  TrainConfig train;
  EvalConfig eval;

  void validate() const;
};

/// Defaults are applied for absent keys; `motif_weights` defaults to
/// [0.7, 0.1, 0.2] for three motifs and 1/T otherwise.
PipelineConfig parse_config(const std::string& json_text, const std::string& source = "<config>");
PipelineConfig load_config(const std::filesystem::path& path);
/// Canonical JSON with every key spelled out.
std::string dump_config(const PipelineConfig& cfg);
/// FNV-1a over the canonical JSON, excluding out_dir.
std::string config_hash(const PipelineConfig& cfg);
/// Applies a seed override to every seeded component.
void set_seed(PipelineConfig& cfg, std::uint64_t seed);

/// Canonical file locations inside the run directory.
struct RunLayout {
  std::filesystem::path root;

  std::filesystem::path data() const { return root / "data"; }
  std::filesystem::path mine() const { return root / "mine"; }
  std::filesystem::path preprocess() const { return root / "preprocess"; }
  std::filesystem::path train() const { return root / "train"; }
  std::filesystem::path eval() const { return root / "eval"; }
  std::filesystem::path ablate() const { return root / "ablate"; }
};

struct LoadedData {
  SparseGraph graph;
  FeatureMatrix features;
  std::optional<LabelSet> labels;
};

LoadedData load_dataset(const PipelineConfig& cfg);

/// Every command writes `manifest.json` into its stage directory and skips
/// work when a manifest with the same config hash is already present and
/// `force` is unset. Missing upstream stages are run first.
struct CommandOptions {
  bool force = false;
  std::ostream* log = nullptr;
};

void cmd_synth(const PipelineConfig& cfg, CommandOptions opts = {});
/// Returns the instance count per motif.
std::vector<std::size_t> cmd_mine(const PipelineConfig& cfg, CommandOptions opts = {});
void cmd_preprocess(const PipelineConfig& cfg, CommandOptions opts = {});
void cmd_train(const PipelineConfig& cfg, CommandOptions opts = {});

struct EvalSummary {
  std::string metric;
  double mean = 0.0;
  double std = 0.0;
};

std::vector<EvalSummary> cmd_eval(const PipelineConfig& cfg, CommandOptions opts = {});

/// Stand-alone evaluation of an embedding CSV against a label CSV; results
/// (and the heatmap for mlknn) are written to `out_dir`.
std::vector<EvalSummary> evaluate_files(const std::filesystem::path& embeddings, const std::filesystem::path& labels,
                                        const EvalConfig& eval, std::uint64_t seed,
                                        const std::filesystem::path& out_dir);

struct AblationRow {
  std::string variant;
  EvalSummary result;
};

/// Names of the seven component-study variants, full model first.
std::vector<std::string> ablation_variants();
/// Flags for one named variant.
AblationFlags ablation_flags(const std::string& variant);
std::vector<AblationRow> cmd_ablate(const PipelineConfig& cfg, CommandOptions opts = {});

/// Loads the preprocessed semantic graphs of a run.
std::vector<SparseGraph> load_semantic_graphs(const PipelineConfig& cfg, std::size_t num_nodes);
/// Loads the preprocessed diffusion, sparsified as configured.
SparseGraph load_diffusion(const PipelineConfig& cfg);

}  // namespace fsgcl
