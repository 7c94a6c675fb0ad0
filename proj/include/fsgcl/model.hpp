#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fsgcl/autodiff.hpp"
#include "fsgcl/graph.hpp"
#include "fsgcl/views.hpp"

namespace fsgcl {

/// Architecture shared by the online and target networks.
struct ModelConfig {
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 512;
  /// Number of semantic graphs T.
  std::size_t num_semantic = 3;
  /// Propagation layers per GCN.
  std::size_t gcn_layers = 1;
  /// Perceptron layers in the online predictor.
  std::size_t predictor_layers = 1;
  double beta = 1.0;
  /// Fixed per-motif coefficients w_1..w_T.
  std::vector<double> motif_weights;
  double prelu_init = 0.25;
};

/// Named, ordered parameter tensors. Order is stable and identical between
/// the online network and the target network's prefix.
struct ParamStore {
  std::vector<std::string> names;
  std::vector<DenseMatrix> values;

  std::size_t size() const noexcept { return values.size(); }
  std::size_t add(std::string name, DenseMatrix value);
  std::size_t index_of(const std::string& name) const;
  std::size_t scalar_count() const;
};

enum class Role { kOnline, kTarget };

/// All weights of one network.
///
/// encoder(view, graph) covers both views and graph indices 0..T;
/// projector and predictor cover embedding indices 0..T+1. The target role
/// has no predictor; its parameters are the first `shared_size()` entries of
/// the online layout.
class NetworkParams {
 public:
  struct Layer {
    std::size_t weight;
    std::size_t bias;  // npos for GCN layers (no bias)
    std::size_t slope;
  };
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  NetworkParams() = default;
  NetworkParams(const ModelConfig& config, Role role, std::uint64_t seed);

  const ModelConfig& config() const noexcept { return config_; }
  Role role() const noexcept { return role_; }
  ParamStore& store() noexcept { return store_; }
  const ParamStore& store() const noexcept { return store_; }

  const std::vector<Layer>& encoder(std::size_t view, std::size_t graph) const {
    return encoders_[view][graph];
  }
  const Layer& projector(std::size_t index) const { return projectors_[index]; }
  const std::vector<Layer>& predictor(std::size_t index) const;

  /// Number of parameters that have a target counterpart.
  std::size_t shared_size() const noexcept { return shared_size_; }

 private:
  ModelConfig config_;
  Role role_ = Role::kOnline;
  ParamStore store_;
  std::vector<std::vector<std::vector<Layer>>> encoders_;
  std::vector<Layer> projectors_;
  std::vector<std::vector<Layer>> predictors_;
  std::size_t shared_size_ = 0;
};

/// Parameters bound to a tape for one pass. Online parameters record
/// gradients; target parameters are constants (stop-gradient).
struct BoundParams {
  const NetworkParams* params = nullptr;
  std::vector<ad::Tensor> tensors;
};

BoundParams bind(ad::Tape& tape, const NetworkParams& params, bool with_grad);

/// Structures of a view after self-loop insertion and normalization; built
/// once and reused for every step.
struct PreparedView {
  std::vector<SparseGraph> normalized;
};

PreparedView prepare_view(const GraphView& view);
PreparedView prepare_structures(const std::vector<SparseGraph>& structures);

/// Z (T+2 embeddings), Q (T+2 projections) and P (T+2 predictions, online only).
struct EncodedBundle {
  std::vector<ad::Tensor> z;
  std::vector<ad::Tensor> q;
  std::vector<ad::Tensor> p;
};

/// Stacked propagation layers: H <- PReLU(A_norm H W).
ad::Tensor gcn_encode(const SparseGraph& normalized, const ad::Tensor& features,
                      const BoundParams& bound, const std::vector<NetworkParams::Layer>& layers);

/// beta * sum_i w_i Z_i + Z_0
ad::Tensor combine(const ad::Tensor& holistic, const std::vector<ad::Tensor>& semantics,
                   const std::vector<double>& weights, double beta);

/// PReLU(Z U + b) with the projector of embedding `index`.
ad::Tensor project(const ad::Tensor& z, const BoundParams& bound, std::size_t index);

/// L stacked perceptron layers of the online predictor for `index`.
ad::Tensor predict(const ad::Tensor& q, const BoundParams& bound, std::size_t index);

/// Encodes a view with the encoder set `view_index` (0 or 1) of `bound`.
EncodedBundle forward(const PreparedView& view, const ad::Tensor& features, const BoundParams& bound,
                      std::size_t view_index);

/// Flat snapshot: 8-byte magic "FSGCLPRM", uint64 header length, JSON header
/// {"names","shapes","offsets",...}, then little-endian float64 payload.
void save_params(const ParamStore& store, const std::filesystem::path& path,
                 const std::string& extra_json = "{}");
ParamStore load_params(const std::filesystem::path& path);

}  // namespace fsgcl
