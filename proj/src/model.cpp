#include "fsgcl/model.hpp"

#include <array>
#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "fsgcl/error.hpp"
#include "fsgcl/rng.hpp"

namespace fsgcl {

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

DenseMatrix glorot(std::size_t fan_in, std::size_t fan_out, std::uint64_t seed, const std::string& name) {
  Rng rng(derive_seed(seed, {fnv1a(name)}));
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  DenseMatrix w(static_cast<Eigen::Index>(fan_in), static_cast<Eigen::Index>(fan_out));
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = (2.0 * uniform01(rng) - 1.0) * limit;
  return w;
}

constexpr char kParamMagic[8] = {'F', 'S', 'G', 'C', 'L', 'P', 'R', 'M'};

}  // namespace

std::size_t ParamStore::add(std::string name, DenseMatrix value) {
  names.push_back(std::move(name));
  values.push_back(std::move(value));
  return values.size() - 1;
}

std::size_t ParamStore::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return i;
  throw ContractError("no parameter named '" + name + "'");
}

std::size_t ParamStore::scalar_count() const {
  std::size_t total = 0;
  for (const auto& v : values) total += static_cast<std::size_t>(v.size());
  return total;
}

NetworkParams::NetworkParams(const ModelConfig& config, Role role, std::uint64_t seed)
    : config_(config), role_(role) {
  if (config.input_dim == 0 || config.hidden_dim == 0) throw ContractError("model dimensions must be positive");
  if (config.gcn_layers == 0) throw ContractError("at least one GCN layer is required");
  if (role == Role::kOnline && config.predictor_layers == 0)
    throw ContractError("online predictor needs at least one layer");
  if (config.motif_weights.size() != config.num_semantic)
    throw ContractError("expected " + std::to_string(config.num_semantic) + " motif weights, got " +
                        std::to_string(config.motif_weights.size()));

  const std::size_t d = config.hidden_dim;
  const std::size_t t = config.num_semantic;
  auto slope = [&](const std::string& name) {
    return store_.add(name, DenseMatrix::Constant(1, 1, config.prelu_init));
  };

  encoders_.resize(2);
  for (std::size_t view = 0; view < 2; ++view) {
    encoders_[view].resize(t + 1);
    for (std::size_t g = 0; g <= t; ++g) {
      for (std::size_t l = 0; l < config.gcn_layers; ++l) {
        const std::string prefix = "enc.v" + std::to_string(view) + ".g" + std::to_string(g) + ".l" + std::to_string(l);
        const std::size_t fan_in = l == 0 ? config.input_dim : d;
        const auto w = store_.add(prefix + ".W", glorot(fan_in, d, seed, prefix + ".W"));
        encoders_[view][g].push_back({w, npos, slope(prefix + ".prelu")});
      }
    }
  }
  for (std::size_t i = 0; i < t + 2; ++i) {
    const std::string prefix = "proj." + std::to_string(i);
    const auto u = store_.add(prefix + ".U", glorot(d, d, seed, prefix + ".U"));
    const auto b = store_.add(prefix + ".b", DenseMatrix::Zero(1, static_cast<Eigen::Index>(d)));
    projectors_.push_back({u, b, slope(prefix + ".prelu")});
  }
  shared_size_ = store_.size();
  if (role == Role::kOnline) {
    predictors_.resize(t + 2);
    for (std::size_t i = 0; i < t + 2; ++i)
      for (std::size_t l = 0; l < config.predictor_layers; ++l) {
        const std::string prefix = "pred." + std::to_string(i) + ".l" + std::to_string(l);
        const auto e = store_.add(prefix + ".E", glorot(d, d, seed, prefix + ".E"));
        const auto a = store_.add(prefix + ".a", DenseMatrix::Zero(1, static_cast<Eigen::Index>(d)));
        predictors_[i].push_back({e, a, slope(prefix + ".prelu")});
      }
  }
}

const std::vector<NetworkParams::Layer>& NetworkParams::predictor(std::size_t index) const {
  if (role_ != Role::kOnline) throw ContractError("the target network has no predictor");
  return predictors_[index];
}

BoundParams bind(ad::Tape& tape, const NetworkParams& params, bool with_grad) {
  BoundParams out{&params, {}};
  out.tensors.reserve(params.store().size());
  for (const auto& v : params.store().values)
    out.tensors.push_back(with_grad ? tape.parameter(v) : tape.constant(v));
  return out;
}

PreparedView prepare_structures(const std::vector<SparseGraph>& structures) {
  PreparedView out;
  out.normalized.reserve(structures.size());
  for (const auto& s : structures) out.normalized.push_back(sym_normalized_adjacency(s, true));
  return out;
}

PreparedView prepare_view(const GraphView& view) { return prepare_structures(view.structures); }

ad::Tensor gcn_encode(const SparseGraph& normalized, const ad::Tensor& features, const BoundParams& bound,
                      const std::vector<NetworkParams::Layer>& layers) {
  if (static_cast<Eigen::Index>(normalized.num_nodes()) != features.rows())
    throw ContractError("gcn_encode: structure has " + std::to_string(normalized.num_nodes()) +
                        " nodes but features have " + std::to_string(features.rows()) + " rows");
  ad::Tensor h = features;
  for (const auto& layer : layers) {
    h = ad::matmul(h, bound.tensors[layer.weight]);
    h = ad::spmm(normalized, h);
    h = ad::prelu(h, bound.tensors[layer.slope]);
  }
  return h;
}

ad::Tensor combine(const ad::Tensor& holistic, const std::vector<ad::Tensor>& semantics,
                   const std::vector<double>& weights, double beta) {
  if (weights.size() != semantics.size()) throw ContractError("combine: one weight per semantic embedding required");
  ad::Tensor out = holistic;
  for (std::size_t i = 0; i < semantics.size(); ++i) out = ad::add(out, ad::scale(semantics[i], beta * weights[i]));
  return out;
}

ad::Tensor project(const ad::Tensor& z, const BoundParams& bound, std::size_t index) {
  const auto& layer = bound.params->projector(index);
  auto h = ad::add_row(ad::matmul(z, bound.tensors[layer.weight]), bound.tensors[layer.bias]);
  return ad::prelu(h, bound.tensors[layer.slope]);
}

ad::Tensor predict(const ad::Tensor& q, const BoundParams& bound, std::size_t index) {
  ad::Tensor h = q;
  for (const auto& layer : bound.params->predictor(index)) {
    h = ad::add_row(ad::matmul(h, bound.tensors[layer.weight]), bound.tensors[layer.bias]);
    h = ad::prelu(h, bound.tensors[layer.slope]);
  }
  return h;
}

EncodedBundle forward(const PreparedView& view, const ad::Tensor& features, const BoundParams& bound,
                      std::size_t view_index) {
  const auto& params = *bound.params;
  const auto& cfg = params.config();
  const std::size_t t = cfg.num_semantic;
  if (view.normalized.size() != t + 1)
    throw ContractError("forward: view has " + std::to_string(view.normalized.size()) + " structures, model expects " +
                        std::to_string(t + 1));
  EncodedBundle out;
  for (std::size_t g = 0; g <= t; ++g)
    out.z.push_back(gcn_encode(view.normalized[g], features, bound, params.encoder(view_index, g)));
  std::vector<ad::Tensor> semantics(out.z.begin() + 1, out.z.end());
  out.z.push_back(combine(out.z[0], semantics, cfg.motif_weights, cfg.beta));
  for (std::size_t i = 0; i < t + 2; ++i) out.q.push_back(project(out.z[i], bound, i));
  if (params.role() == Role::kOnline)
    for (std::size_t i = 0; i < t + 2; ++i) out.p.push_back(predict(out.q[i], bound, i));
  return out;
}

void save_params(const ParamStore& store, const std::filesystem::path& path, const std::string& extra_json) {
  nlohmann::json header;
  header["format"] = "fsgcl-params-v1";
  header["dtype"] = "float64";
  header["names"] = store.names;
  std::vector<std::array<std::int64_t, 2>> shapes;
  std::vector<std::size_t> offsets;
  std::size_t offset = 0;
  for (const auto& v : store.values) {
    shapes.push_back({v.rows(), v.cols()});
    offsets.push_back(offset);
    offset += static_cast<std::size_t>(v.size());
  }
  header["shapes"] = shapes;
  header["offsets"] = offsets;
  header["extra"] = nlohmann::json::parse(extra_json);
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  const std::uint64_t len = text.size();
  out.write(kParamMagic, sizeof(kParamMagic));
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& v : store.values)
    out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
}

ParamStore load_params(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  char magic[8];
  std::uint64_t len = 0;
  in.read(magic, sizeof(magic));
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  if (!in || std::memcmp(magic, kParamMagic, sizeof(magic)) != 0)
    throw ParseError(path.string(), 0, "not a parameter snapshot");
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  const auto header = nlohmann::json::parse(text);
  ParamStore store;
  const auto names = header.at("names").get<std::vector<std::string>>();
  const auto shapes = header.at("shapes").get<std::vector<std::array<std::int64_t, 2>>>();
  for (std::size_t i = 0; i < names.size(); ++i) {
    DenseMatrix v(shapes[i][0], shapes[i][1]);
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
    store.add(names[i], std::move(v));
  }
  if (!in) throw ParseError(path.string(), 0, "truncated parameter snapshot");
  return store;
}

}  // namespace fsgcl
