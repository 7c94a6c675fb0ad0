#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fsgcl/autodiff.hpp"
#include "fsgcl/model.hpp"
#include "fsgcl/semantic.hpp"
#include "fsgcl/views.hpp"

namespace fsgcl {

/// Ablation switches mirroring the component study.
struct AblationFlags {
  bool no_slow = false;             // negatives + InfoNCE instead of the EMA target
  bool no_semantic_graphs = false;  // every semantic structure replaced by A
  bool topk_only = false;           // semantic structures replaced by unmasked top-k cosine
  bool no_semantic_loss = false;    // drop the semantic-level terms
  bool no_holistic_loss = false;    // drop the holistic term
  bool uniform_weights = false;     // w_i = 1/T
};

struct TrainConfig {
  double gamma = 1.0;
  double tau = 0.99;
  double base_lr = 1e-3;
  std::size_t warmup_steps = 100;
  std::size_t total_steps = 1000;
  double weight_decay = 1e-5;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double drop_rate = 0.2;
  /// Draw a fresh feature mask every step; otherwise step 0's mask is reused.
  bool resample_augmentation = true;
  bool perturb_semantic_edges = false;
  /// Neighbors per node for the top-k-only ablation.
  std::size_t k = 5;
  double nce_temperature = 0.5;
  std::uint64_t seed = 0;
  ModelConfig model;
  AblationFlags ablation;

  /// Throws ConfigError on out-of-range values.
  void validate() const;
};

/// Per-term values of one (possibly symmetrized) loss evaluation.
struct LossBreakdown {
  double holistic = 0.0;
  double combine = 0.0;
  std::vector<double> semantic;
  double total = 0.0;
};

struct LossTerms {
  double gamma = 1.0;
  bool holistic = true;
  bool semantic = true;
};

/// -(1/N) sum_v cos(P_v, Q_v); `q` is detached (no gradient flows into it).
ad::Tensor cosine_pair_loss(const ad::Tensor& p, const ad::Tensor& q);

struct JointLoss {
  ad::Tensor total;
  LossBreakdown breakdown;
};

/// gamma * sum_i L_sem^i + L_holistic + L_combine between the online
/// predictions and the target projections.
JointLoss joint_loss(const EncodedBundle& online, const EncodedBundle& target, const LossTerms& terms);

/// A prepared view together with its (augmented) features and the encoder
/// set that processes it.
struct ViewInput {
  const PreparedView* view;
  const FeatureMatrix* features;
  std::size_t encoder;
};

struct SymmetrizedLoss {
  JointLoss loss;
  BoundParams online;
  BoundParams target;
};

/// Joint(a -> b) + Joint(b -> a): each view goes through the online network
/// while the other goes through the target network. The target side is
/// bound as constants on `tape`.
SymmetrizedLoss symmetrized_loss(ad::Tape& tape, const ViewInput& a, const ViewInput& b,
                                 const NetworkParams& online, const NetworkParams& target,
                                 const LossTerms& terms);

/// Negative-sampling variant: both views through the online network, each
/// embedding index scored by InfoNCE against all other nodes.
SymmetrizedLoss contrastive_nce_loss(ad::Tape& tape, const ViewInput& a, const ViewInput& b,
                                     const NetworkParams& online, const LossTerms& terms,
                                     double temperature);

/// xi <- tau * xi + (1 - tau) * theta over the parameters both share.
void ema_update(NetworkParams& target, const NetworkParams& online, double tau);
void ema_update(ParamStore& target, const ParamStore& online, double tau);

/// Linear warmup to base_lr over `warmup` steps, then cosine decay to 0 at `total`.
double lr_schedule(std::size_t step, double base_lr, std::size_t warmup, std::size_t total);

/// Adaptive moments with decoupled weight decay.
class AdamW {
 public:
  AdamW(double beta1, double beta2, double eps, double weight_decay)
      : beta1_(beta1), beta2_(beta2), eps_(eps), weight_decay_(weight_decay) {}

  void step(ParamStore& params, const std::vector<DenseMatrix>& grads, double lr);
  std::size_t steps_taken() const noexcept { return t_; }

 private:
  double beta1_, beta2_, eps_, weight_decay_;
  std::vector<DenseMatrix> m_, v_;
  std::size_t t_ = 0;
};

struct TraceRow {
  std::size_t step;
  double lr;
  LossBreakdown loss;
};

struct TrainResult {
  NetworkParams online;
  NetworkParams target;
  /// Combined embeddings of the online encoder on the first view with
  /// unperturbed features.
  DenseMatrix embeddings;
  std::vector<TraceRow> trace;
};

/// Semantic structures after applying the structural ablations.
std::vector<SparseGraph> ablate_structures(const SparseGraph& g, const FeatureMatrix& x,
                                           const std::vector<SparseGraph>& semantic, const TrainConfig& cfg);

/// Full training loop on precomputed structures.
TrainResult train(const SparseGraph& g, const SparseGraph& diffusion, const FeatureMatrix& x,
                  const std::vector<SparseGraph>& semantic, const TrainConfig& cfg);

/// Convenience overload that computes the diffusion with teleport `alpha`.
TrainResult train(const SparseGraph& g, const FeatureMatrix& x, const SemanticGraphSet& sg,
                  const TrainConfig& cfg, double alpha = 0.2);

/// Embeddings of an online network on (structures, features) without gradients.
DenseMatrix infer_embeddings(const NetworkParams& online, const std::vector<SparseGraph>& structures,
                             const FeatureMatrix& x, std::size_t encoder = 0);

/// CSV: step,lr,L_holistic,L_combine,L_semantic_1..T,total
void write_trace_csv(const std::vector<TraceRow>& trace, const std::filesystem::path& path);

}  // namespace fsgcl
