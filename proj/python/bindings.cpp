#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "fsgcl/error.hpp"
#include "fsgcl/evaluation.hpp"
#include "fsgcl/motif.hpp"
#include "fsgcl/pipeline.hpp"
#include "fsgcl/semantic.hpp"
#include "fsgcl/synthetic.hpp"
#include "fsgcl/views.hpp"

namespace py = pybind11;
using namespace fsgcl;

namespace {

std::vector<MotifPattern> patterns(const std::vector<std::string>& names) {
  std::vector<MotifPattern> out;
  for (const auto& n : names) out.push_back(MotifPattern::builtin(n));
  return out;
}

LabelSet to_label_set(const std::vector<std::vector<int>>& labels) {
  LabelSet l;
  l.labels = labels;
  for (const auto& row : labels)
    for (int c : row) l.num_classes = std::max(l.num_classes, c + 1);
  return l;
}

// kwargs -> {"<section>": kwargs} -> parsed config, so key checking and
// defaults match the JSON configuration files.
PipelineConfig config_from_kwargs(const char* section, const py::kwargs& kwargs) {
  py::dict root;
  root[section] = kwargs;
  const auto text = py::module_::import("json").attr("dumps")(root).cast<std::string>();
  return parse_config(text, "<kwargs>");
}

py::tuple triplet_arrays(const SparseGraph& g) {
  py::array_t<std::int64_t> rows(static_cast<py::ssize_t>(g.nnz())), cols(static_cast<py::ssize_t>(g.nnz()));
  py::array_t<double> vals(static_cast<py::ssize_t>(g.nnz()));
  auto r = rows.mutable_unchecked<1>();
  auto c = cols.mutable_unchecked<1>();
  auto v = vals.mutable_unchecked<1>();
  py::ssize_t e = 0;
  for (const auto& t : g.to_triplets()) {
    r(e) = t.row;
    c(e) = t.col;
    v(e) = t.value;
    ++e;
  }
  return py::make_tuple(rows, cols, vals);
}

}  // namespace

PYBIND11_MODULE(_fsgcl, m) {
  m.doc() = "Motif semantic graphs and dual-view contrastive node embeddings";
  m.attr("__version__") = kVersion;

  static py::exception<Error> base(m, "FsgclError");
  static py::exception<InputError> input(m, "InputError", base.ptr());
  static py::exception<ParseError> parse(m, "ParseError", base.ptr());
  static py::exception<ContractError> contract(m, "ContractError", base.ptr());
  static py::exception<NumericError> numeric(m, "NumericError", base.ptr());
  static py::exception<ConfigError> config(m, "ConfigError", base.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const InputError& e) {
      py::set_error(input, e.what());
    } catch (const ParseError& e) {
      py::set_error(parse, e.what());
    } catch (const ContractError& e) {
      py::set_error(contract, e.what());
    } catch (const NumericError& e) {
      py::set_error(numeric, e.what());
    } catch (const ConfigError& e) {
      py::set_error(config, e.what());
    }
  });

  py::class_<SparseGraph>(m, "Graph")
      .def(py::init<std::size_t>(), py::arg("num_nodes"))
      .def_static(
          "from_edges",
          [](std::size_t n, const std::vector<std::pair<NodeId, NodeId>>& edges,
             std::optional<std::vector<double>> weights, bool symmetrize) {
            if (weights && weights->size() != edges.size())
              throw ContractError("from_edges: one weight per edge required");
            std::vector<Triplet> t;
            for (std::size_t e = 0; e < edges.size(); ++e) {
              const auto [u, v] = edges[e];
              if (u >= n || v >= n) throw InputError("from_edges: node id out of range");
              const double w = weights ? (*weights)[e] : 1.0;
              t.push_back({u, v, w});
              if (symmetrize && u != v) t.push_back({v, u, w});
            }
            return SparseGraph::from_triplets(n, std::move(t));
          },
          py::arg("num_nodes"), py::arg("edges"), py::arg("weights") = py::none(), py::arg("symmetrize") = true)
      .def_property_readonly("num_nodes", &SparseGraph::num_nodes)
      .def_property_readonly("nnz", &SparseGraph::nnz)
      .def("degree", &SparseGraph::degree)
      .def("has_edge", &SparseGraph::has_edge)
      .def("weight", &SparseGraph::weight)
      .def("is_symmetric", &SparseGraph::is_symmetric, py::arg("tol") = 0.0)
      .def("to_dense", &SparseGraph::to_dense)
      .def("triplets", &triplet_arrays, "(rows, cols, values) arrays in row-major order")
      .def("__eq__", [](const SparseGraph& a, const SparseGraph& b) { return a == b; })
      .def("__repr__", [](const SparseGraph& g) {
        std::ostringstream s;
        s << "Graph(num_nodes=" << g.num_nodes() << ", nnz=" << g.nnz() << ")";
        return s.str();
      });

  m.def(
      "count_instances",
      [](const SparseGraph& g, const std::string& motif, unsigned workers) {
        return enumerate_instances(g, MotifPattern::builtin(motif), {workers}).size();
      },
      py::arg("graph"), py::arg("motif"), py::arg("workers") = 1);
  m.def(
      "cooccurrence",
      [](const SparseGraph& g, const std::string& motif) {
        return cooccurrence(enumerate_instances(g, MotifPattern::builtin(motif)), g.num_nodes());
      },
      py::arg("graph"), py::arg("motif"));
  m.def(
      "semantic_graphs",
      [](const SparseGraph& g, const DenseMatrix& x, const std::vector<std::string>& motifs, std::size_t k) {
        return build_semantic_graphs(g, x, patterns(motifs), k).graphs;
      },
      py::arg("graph"), py::arg("features"), py::arg("motifs") = std::vector<std::string>{"triangle", "clique4", "cycle4"},
      py::arg("k") = 5);
  m.def(
      "ppr_diffusion", [](const SparseGraph& g, double alpha) { return ppr_diffusion(g, alpha); }, py::arg("graph"),
      py::arg("alpha") = 0.2);

  m.def(
      "generate_synthetic",
      [](const py::kwargs& kwargs) {
        const auto cfg = config_from_kwargs("synthetic", kwargs);
        const auto d = generate(cfg.synthetic);
        return py::make_tuple(d.graph, d.features, d.labels.labels);
      },
      "Overlapping-community benchmark; keyword arguments follow the 'synthetic' config section.\n"
      "Returns (graph, features, label_sets).");

  m.def(
      "logistic_accuracy",
      [](const DenseMatrix& z, const std::vector<int>& labels, std::size_t repeats, std::uint64_t seed) {
        const auto r = logistic_eval_repeated(z, labels, repeats, seed);
        return py::make_tuple(r.mean, r.std);
      },
      py::arg("embeddings"), py::arg("labels"), py::arg("repeats") = 5, py::arg("seed") = 0);
  m.def(
      "mlknn",
      [](const DenseMatrix& z, const std::vector<std::vector<int>>& labels, std::uint64_t seed,
         double train_fraction, std::size_t k) {
        const LabelSet l = to_label_set(labels);
        const auto r = mlknn_eval(z, l, make_splits(l.size(), seed, train_fraction, 0.1), {k, 1.0, HeatmapScore::kExactSet});
        py::dict out;
        out["exact_match"] = r.exact_match;
        out["heatmap"] = r.heatmap;
        out["offdiag"] = mean_off_diagonal(r.heatmap);
        out["diag"] = mean_diagonal(r.heatmap);
        out["predicted"] = r.predicted;
        return out;
      },
      py::arg("embeddings"), py::arg("labels"), py::arg("seed") = 0, py::arg("train_fraction") = 0.1,
      py::arg("k") = 10);

  py::class_<PipelineConfig>(m, "Config")
      .def_static("from_json", [](const std::string& text) { return parse_config(text); }, py::arg("text"))
      .def_static("load", [](const std::string& path) { return load_config(path); }, py::arg("path"))
      .def_property(
          "out_dir", [](const PipelineConfig& c) { return c.out_dir.string(); },
          [](PipelineConfig& c, const std::string& p) { c.out_dir = p; })
      .def_property(
          "seed", [](const PipelineConfig& c) { return c.seed; },
          [](PipelineConfig& c, std::uint64_t s) { set_seed(c, s); })
      .def("hash", &config_hash)
      .def("dump", &dump_config);

  m.def(
      "run",
      [](const std::string& command, const PipelineConfig& cfg, bool force) -> py::object {
        std::ostringstream log;
        const CommandOptions opts{force, &log};
        py::gil_scoped_release release;
        if (command == "synth") {
          cmd_synth(cfg, opts);
        } else if (command == "mine") {
          const auto counts = cmd_mine(cfg, opts);
          py::gil_scoped_acquire acquire;
          py::dict out;
          for (std::size_t i = 0; i < counts.size(); ++i) out[py::str(cfg.motifs[i].name)] = counts[i];
          return std::move(out);
        } else if (command == "preprocess") {
          cmd_preprocess(cfg, opts);
        } else if (command == "train") {
          cmd_train(cfg, opts);
        } else if (command == "eval") {
          const auto rows = cmd_eval(cfg, opts);
          py::gil_scoped_acquire acquire;
          py::dict out;
          for (const auto& r : rows) out[py::str(r.metric)] = py::make_tuple(r.mean, r.std);
          return std::move(out);
        } else if (command == "ablate") {
          const auto rows = cmd_ablate(cfg, opts);
          py::gil_scoped_acquire acquire;
          py::list out;
          for (const auto& r : rows) out.append(py::make_tuple(r.variant, r.result.metric, r.result.mean, r.result.std));
          return std::move(out);
        } else {
          throw ConfigError("unknown command '" + command + "'");
        }
        py::gil_scoped_acquire acquire;
        return py::none();
      },
      py::arg("command"), py::arg("config"), py::arg("force") = false,
      "Runs one pipeline stage (synth, mine, preprocess, train, eval, ablate) and any missing upstream stages.");
}
