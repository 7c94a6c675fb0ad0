#include "fsgcl/trainer.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "fsgcl/error.hpp"
#include "fsgcl/rng.hpp"

namespace fsgcl {

void TrainConfig::validate() const {
  if (!(tau >= 0.0 && tau <= 1.0)) throw ConfigError("tau must lie in [0, 1]");
  if (gamma < 0.0) throw ConfigError("gamma must be non-negative");
  if (warmup_steps > total_steps) throw ConfigError("warmup_steps must not exceed total_steps");
  if (!(drop_rate >= 0.0 && drop_rate < 1.0)) throw ConfigError("drop_rate must lie in [0, 1)");
  if (base_lr < 0.0) throw ConfigError("base_lr must be non-negative");
  if (k == 0) throw ConfigError("k must be >= 1");
  if (nce_temperature <= 0.0) throw ConfigError("nce_temperature must be positive");
}

ad::Tensor cosine_pair_loss(const ad::Tensor& p, const ad::Tensor& q) {
  ad::Tape& tape = *p.tape();
  const ad::Tensor q_const = tape.constant(q.value());
  const ad::Tensor cos = ad::rowwise_dot(ad::row_l2_normalize(p), ad::row_l2_normalize(q_const));
  return ad::scale(ad::mean(cos), -1.0);
}

JointLoss joint_loss(const EncodedBundle& online, const EncodedBundle& target, const LossTerms& terms) {
  const std::size_t count = online.p.size();
  if (count < 2 || target.q.size() != count)
    throw ContractError("joint_loss: bundles must carry matching T+2 predictions/projections");
  const std::size_t t = count - 2;

  JointLoss out;
  ad::Tensor holistic = cosine_pair_loss(online.p[0], target.q[0]);
  ad::Tensor combined = cosine_pair_loss(online.p[t + 1], target.q[t + 1]);
  out.breakdown.holistic = holistic.item();
  out.breakdown.combine = combined.item();
  ad::Tensor total = terms.holistic ? ad::add(holistic, combined) : combined;
  for (std::size_t i = 1; i <= t; ++i) {
    ad::Tensor sem = cosine_pair_loss(online.p[i], target.q[i]);
    out.breakdown.semantic.push_back(sem.item());
    if (terms.semantic && terms.gamma != 0.0) total = ad::add(total, ad::scale(sem, terms.gamma));
  }
  out.total = total;
  out.breakdown.total = total.item();
  return out;
}

namespace {

void accumulate_breakdown(LossBreakdown& into, const LossBreakdown& from) {
  into.holistic += from.holistic;
  into.combine += from.combine;
  if (into.semantic.size() < from.semantic.size()) into.semantic.resize(from.semantic.size(), 0.0);
  for (std::size_t i = 0; i < from.semantic.size(); ++i) into.semantic[i] += from.semantic[i];
}

}  // namespace

SymmetrizedLoss symmetrized_loss(ad::Tape& tape, const ViewInput& a, const ViewInput& b,
                                 const NetworkParams& online, const NetworkParams& target,
                                 const LossTerms& terms) {
  if (online.role() != Role::kOnline || target.role() != Role::kTarget)
    throw ContractError("symmetrized_loss: expected (online, target) networks");
  SymmetrizedLoss out{{}, bind(tape, online, true), bind(tape, target, false)};
  const ad::Tensor xa = tape.constant(*a.features);
  const ad::Tensor xb = tape.constant(*b.features);

  const EncodedBundle online_a = forward(*a.view, xa, out.online, a.encoder);
  const EncodedBundle online_b = forward(*b.view, xb, out.online, b.encoder);
  const EncodedBundle target_a = forward(*a.view, xa, out.target, a.encoder);
  const EncodedBundle target_b = forward(*b.view, xb, out.target, b.encoder);

  JointLoss forward_loss = joint_loss(online_a, target_b, terms);
  JointLoss swapped_loss = joint_loss(online_b, target_a, terms);
  out.loss.total = ad::add(forward_loss.total, swapped_loss.total);
  accumulate_breakdown(out.loss.breakdown, forward_loss.breakdown);
  accumulate_breakdown(out.loss.breakdown, swapped_loss.breakdown);
  out.loss.breakdown.total = out.loss.total.item();
  return out;
}

SymmetrizedLoss contrastive_nce_loss(ad::Tape& tape, const ViewInput& a, const ViewInput& b,
                                     const NetworkParams& online, const LossTerms& terms, double temperature) {
  SymmetrizedLoss out{{}, bind(tape, online, true), {}};
  const ad::Tensor xa = tape.constant(*a.features);
  const ad::Tensor xb = tape.constant(*b.features);
  const EncodedBundle ea = forward(*a.view, xa, out.online, a.encoder);
  const EncodedBundle eb = forward(*b.view, xb, out.online, b.encoder);
  const std::size_t t = ea.p.size() - 2;

  auto nce = [&](std::size_t i) {
    auto one_way = [&](const EncodedBundle& from, const EncodedBundle& to) {
      const auto logits = ad::scale(ad::matmul_nt(ad::row_l2_normalize(from.p[i]), ad::row_l2_normalize(to.q[i])),
                                    1.0 / temperature);
      return ad::cross_entropy_diagonal(logits);
    };
    return ad::add(one_way(ea, eb), one_way(eb, ea));
  };

  ad::Tensor holistic = nce(0);
  ad::Tensor combined = nce(t + 1);
  out.loss.breakdown.holistic = holistic.item();
  out.loss.breakdown.combine = combined.item();
  ad::Tensor total = terms.holistic ? ad::add(holistic, combined) : combined;
  for (std::size_t i = 1; i <= t; ++i) {
    ad::Tensor sem = nce(i);
    out.loss.breakdown.semantic.push_back(sem.item());
    if (terms.semantic && terms.gamma != 0.0) total = ad::add(total, ad::scale(sem, terms.gamma));
  }
  out.loss.total = total;
  out.loss.breakdown.total = total.item();
  return out;
}

void ema_update(ParamStore& target, const ParamStore& online, double tau) {
  if (target.size() > online.size()) throw ContractError("ema_update: target has more parameters than online");
  for (std::size_t i = 0; i < target.size(); ++i) {
    if (target.names[i] != online.names[i] || target.values[i].rows() != online.values[i].rows() ||
        target.values[i].cols() != online.values[i].cols())
      throw ContractError("ema_update: parameter mismatch at '" + target.names[i] + "'");
    target.values[i] = tau * target.values[i] + (1.0 - tau) * online.values[i];
  }
}

void ema_update(NetworkParams& target, const NetworkParams& online, double tau) {
  ema_update(target.store(), online.store(), tau);
}

double lr_schedule(std::size_t step, double base_lr, std::size_t warmup, std::size_t total) {
  if (step <= warmup) return warmup == 0 ? base_lr : static_cast<double>(step) * base_lr / static_cast<double>(warmup);
  if (total <= warmup) return 0.0;
  const double progress = static_cast<double>(step - warmup) / static_cast<double>(total - warmup);
  return base_lr * (1.0 + std::cos(progress * std::numbers::pi)) * 0.5;
}

void AdamW::step(ParamStore& params, const std::vector<DenseMatrix>& grads, double lr) {
  if (grads.size() != params.size()) throw ContractError("AdamW: one gradient per parameter required");
  if (m_.empty()) {
    for (const auto& p : params.values) {
      m_.push_back(DenseMatrix::Zero(p.rows(), p.cols()));
      v_.push_back(DenseMatrix::Zero(p.rows(), p.cols()));
    }
  }
  ++t_;
  const double bias1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bias2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params.values[i];
    const auto& g = grads[i];
    p *= (1.0 - lr * weight_decay_);
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g.cwiseProduct(g);
    p.array() -= lr * (m_[i].array() / bias1) / ((v_[i].array() / bias2).sqrt() + eps_);
  }
}

std::vector<SparseGraph> ablate_structures(const SparseGraph& g, const FeatureMatrix& x,
                                           const std::vector<SparseGraph>& semantic, const TrainConfig& cfg) {
  if (cfg.ablation.no_semantic_graphs) return std::vector<SparseGraph>(semantic.size(), g);
  if (cfg.ablation.topk_only) return std::vector<SparseGraph>(semantic.size(), topk_cosine(x, cfg.k));
  return semantic;
}

namespace {

std::vector<SparseGraph> with_holistic(const SparseGraph& holistic, const std::vector<SparseGraph>& semantic) {
  std::vector<SparseGraph> out{holistic};
  out.insert(out.end(), semantic.begin(), semantic.end());
  return out;
}

ModelConfig effective_model(const TrainConfig& cfg, std::size_t input_dim, std::size_t num_semantic) {
  ModelConfig m = cfg.model;
  m.input_dim = input_dim;
  m.num_semantic = num_semantic;
  if (cfg.ablation.uniform_weights || m.motif_weights.empty())
    m.motif_weights.assign(num_semantic, num_semantic ? 1.0 / static_cast<double>(num_semantic) : 0.0);
  return m;
}

}  // namespace

DenseMatrix infer_embeddings(const NetworkParams& online, const std::vector<SparseGraph>& structures,
                             const FeatureMatrix& x, std::size_t encoder) {
  ad::Tape tape;
  const PreparedView view = prepare_structures(structures);
  const BoundParams bound = bind(tape, online, false);
  const EncodedBundle bundle = forward(view, tape.constant(x), bound, encoder);
  return bundle.z.back().value();
}

TrainResult train(const SparseGraph& g, const SparseGraph& diffusion, const FeatureMatrix& x,
                  const std::vector<SparseGraph>& semantic, const TrainConfig& cfg) {
  cfg.validate();
  const std::vector<SparseGraph> sem = ablate_structures(g, x, semantic, cfg);
  const ModelConfig model = effective_model(cfg, static_cast<std::size_t>(x.cols()), sem.size());

  TrainResult result{NetworkParams(model, Role::kOnline, derive_seed(cfg.seed, {1})),
                     NetworkParams(model, Role::kTarget, derive_seed(cfg.seed, {2})),
                     {},
                     {}};
  NetworkParams& online = result.online;
  NetworkParams& target = result.target;

  const std::vector<SparseGraph> first_structures = with_holistic(g, sem);
  const std::vector<SparseGraph> second_structures = with_holistic(diffusion, sem);
  PreparedView first = prepare_structures(first_structures);
  PreparedView second = prepare_structures(second_structures);

  const LossTerms terms{cfg.gamma, !cfg.ablation.no_holistic_loss, !cfg.ablation.no_semantic_loss};
  AdamW optimizer(cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps, cfg.weight_decay);
  ad::Tape tape;

  for (std::size_t step = 0; step < cfg.total_steps; ++step) {
    const double lr = lr_schedule(step, cfg.base_lr, cfg.warmup_steps, cfg.total_steps);
    const std::uint64_t aug_step = cfg.resample_augmentation ? step : 0;
    const FeatureMatrix x1 = feature_dropout(x, cfg.drop_rate, cfg.seed, aug_step, 0);
    const FeatureMatrix x2 = feature_dropout(x, cfg.drop_rate, cfg.seed, aug_step, 1);
    if (cfg.perturb_semantic_edges) {
      std::vector<SparseGraph> s1 = first_structures, s2 = second_structures;
      for (std::size_t i = 1; i < s1.size(); ++i) {
        s1[i] = edge_dropout(s1[i], cfg.drop_rate, cfg.seed, aug_step, 0);
        s2[i] = edge_dropout(s2[i], cfg.drop_rate, cfg.seed, aug_step, 1);
      }
      first = prepare_structures(s1);
      second = prepare_structures(s2);
    }

    tape.reset();
    const ViewInput a{&first, &x1, 0};
    const ViewInput b{&second, &x2, 1};
    SymmetrizedLoss loss;
    try {
      loss = cfg.ablation.no_slow ? contrastive_nce_loss(tape, a, b, online, terms, cfg.nce_temperature)
                                  : symmetrized_loss(tape, a, b, online, target, terms);
    } catch (const NumericError& e) {
      throw NumericError("training diverged at step " + std::to_string(step) + " (lr " + format_double(lr) +
                         "): " + e.what());
    }
    if (!std::isfinite(loss.loss.breakdown.total))
      throw NumericError("non-finite loss at step " + std::to_string(step));
    tape.backward(loss.loss.total);

    std::vector<DenseMatrix> grads;
    grads.reserve(loss.online.tensors.size());
    for (const auto& t : loss.online.tensors) grads.push_back(t.grad());
    optimizer.step(online.store(), grads, lr);
    if (!cfg.ablation.no_slow) ema_update(target, online, cfg.tau);

    result.trace.push_back({step, lr, loss.loss.breakdown});
  }
  tape.reset();

  result.embeddings = infer_embeddings(online, first_structures, x, 0);
  return result;
}

TrainResult train(const SparseGraph& g, const FeatureMatrix& x, const SemanticGraphSet& sg,
                  const TrainConfig& cfg, double alpha) {
  const DenseMatrix u = ppr_diffusion(g, alpha);
  const double threshold = g.num_nodes() > PprOptions{}.direct_solve_limit ? ViewOptions{}.sparsify_threshold : 0.0;
  return train(g, sparsify_dense(u, threshold), x, sg.graphs, cfg);
}

void write_trace_csv(const std::vector<TraceRow>& trace, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  const std::size_t t = trace.empty() ? 0 : trace.front().loss.semantic.size();
  out << "step,lr,L_holistic,L_combine";
  for (std::size_t i = 1; i <= t; ++i) out << ",L_semantic_" << i;
  out << ",total\n";
  for (const auto& row : trace) {
    out << row.step << ',' << format_double(row.lr) << ',' << format_double(row.loss.holistic) << ','
        << format_double(row.loss.combine);
    for (double s : row.loss.semantic) out << ',' << format_double(s);
    out << ',' << format_double(row.loss.total) << '\n';
  }
}

}  // namespace fsgcl
