#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <algorithm>

#include "latte/config.hpp"
#include "latte/error.hpp"
#include "latte/experiment.hpp"
#include "latte/losses.hpp"
#include "latte/neuralnet.hpp"
#include "latte/proximity.hpp"
#include "latte/rawfeat.hpp"
#include "latte/synth.hpp"
#include "latte/tasks_eval.hpp"
#include "latte/trainer.hpp"

namespace py = pybind11;
using namespace latte;

namespace {

CommunityAssignment assignment(const std::vector<int>& labels, int k) {
  if (k <= 0) k = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  return {labels, k};
}

std::vector<char> as_flags(const std::vector<bool>& labels) { return {labels.begin(), labels.end()}; }

py::dict metrics_dict(const CommunityMetrics& m) {
  py::dict d;
  d["ndbi"] = m.ndbi;
  d["silhouette"] = m.silhouette;
  d["density"] = m.density;
  d["entropy"] = m.entropy;
  d["ncut"] = m.ncut;
  d["ari"] = m.ari ? py::cast(*m.ari) : py::none();
  return d;
}

py::dict loss_dict(const LossRecord& r) {
  py::dict d;
  d["epoch"] = r.epoch;
  d["reconstruction"] = r.reconstruction;
  d["proximity"] = r.proximity;
  d["regularization"] = r.regularization;
  d["task"] = r.task;
  d["embedding"] = r.embedding;
  d["joint"] = r.joint;
  return d;
}

}  // namespace

PYBIND11_MODULE(_latte, m) {
  m.doc() = "Task-aware autoencoder embeddings of heterogeneous social networks";

  auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", error.ptr());
  py::register_exception<GraphError>(m, "GraphError", error.ptr());
  py::register_exception<ShapeError>(m, "ShapeError", error.ptr());
  py::register_exception<NumericError>(m, "NumericError", error.ptr());

  py::class_<HetGraph>(m, "HetGraph")
      .def_property_readonly("num_nodes", &HetGraph::num_nodes)
      .def_property_readonly("num_users", &HetGraph::num_users)
      .def_property_readonly("num_posts", &HetGraph::num_posts)
      .def_property_readonly("node_ids",
                             [](const HetGraph& g) {
                               std::vector<std::string> ids;
                               for (const Node& n : g.nodes()) ids.push_back(n.id);
                               return ids;
                             })
      .def("index_of", &HetGraph::index_of, py::arg("id"))
      .def("user_adjacency", [](const HetGraph& g) { return Matrix(user_adjacency(g).matrix); })
      .def("full_adjacency", [](const HetGraph& g) { return Matrix(full_adjacency(g).matrix); })
      .def("__repr__", [](const HetGraph& g) {
        return "<HetGraph users=" + std::to_string(g.num_users()) + " posts=" + std::to_string(g.num_posts()) + ">";
      });
  m.def("load_graph", &load_graph, py::arg("directory"));
  m.def("save_graph", &save_graph, py::arg("graph"), py::arg("directory"));

  py::class_<Cascade>(m, "Cascade")
      .def_readonly("activated", &Cascade::activated)
      .def_readonly("edges", &Cascade::edges)
      .def("contains", &Cascade::contains, py::arg("user"))
      .def("has_edge", &Cascade::has_edge, py::arg("a"), py::arg("b"));
  m.def("load_cascades", &load_cascades, py::arg("graph"), py::arg("path"));

  py::class_<SynthConfig>(m, "SynthConfig")
      .def(py::init<>())
      .def_readwrite("users", &SynthConfig::users)
      .def_readwrite("blocks", &SynthConfig::blocks)
      .def_readwrite("p_in", &SynthConfig::p_in)
      .def_readwrite("p_out", &SynthConfig::p_out)
      .def_readwrite("posts_min", &SynthConfig::posts_min)
      .def_readwrite("posts_max", &SynthConfig::posts_max)
      .def_readwrite("topics", &SynthConfig::topics)
      .def_readwrite("cascades", &SynthConfig::cascades)
      .def_readwrite("q", &SynthConfig::q)
      .def_readwrite("attribute_signal", &SynthConfig::attribute_signal)
      .def_readwrite("seed", &SynthConfig::seed)
      .def("validate", &SynthConfig::validate);

  py::class_<SyntheticNetwork>(m, "SyntheticNetwork")
      .def_readonly("graph", &SyntheticNetwork::graph)
      .def_readonly("cascades", &SyntheticNetwork::cascades)
      .def_property_readonly("truth", [](const SyntheticNetwork& n) { return n.truth.labels; });
  m.def("generate_network", &generate_network, py::arg("config"));
  m.def("save_network", &save_network, py::arg("network"), py::arg("directory"));

  m.def(
      "features",
      [](const HetGraph& g, bool scaled) {
        const FeatureMatrix f = combined_features(g, build_vocab(g));
        return scaled ? ColumnScaler::fit(f.values).apply(f.values) : f.values;
      },
      py::arg("graph"), py::arg("scaled") = false,
      "Raw attribute matrix, one row per node in graph order; min-max scaled when asked.");
  m.def(
      "proximity",
      [](const HetGraph& g, std::size_t order) { return graph_proximity(g, order).powers(); },
      py::arg("graph"), py::arg("max_order") = kDefaultMaxOrder, "Proximity matrices B^1 .. B^max_order.");
  m.def("normalize", [](const Matrix& a) { return Matrix(normalize(SparseMatrix(a.sparseView()))); }, py::arg("adjacency"));

  py::enum_<Task>(m, "Task")
      .value("NONE", Task::kNone)
      .value("COMMUNITY", Task::kCommunity)
      .value("DIFFUSION", Task::kDiffusion);

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("task", &TrainConfig::task)
      .def_readwrite("hidden", &TrainConfig::hidden)
      .def_readwrite("k", &TrainConfig::k)
      .def_readwrite("d", &TrainConfig::d)
      .def_readwrite("max_order", &TrainConfig::max_order)
      .def_readwrite("alpha", &TrainConfig::alpha)
      .def_readwrite("beta", &TrainConfig::beta)
      .def_readwrite("theta", &TrainConfig::theta)
      .def_readwrite("gamma", &TrainConfig::gamma)
      .def_readwrite("eta", &TrainConfig::eta)
      .def_readwrite("delta", &TrainConfig::delta)
      .def_readwrite("tau", &TrainConfig::tau)
      .def_readwrite("c", &TrainConfig::c)
      .def_readwrite("learning_rate", &TrainConfig::learning_rate)
      .def_readwrite("epochs", &TrainConfig::epochs)
      .def_readwrite("batch_size", &TrainConfig::batch_size)
      .def_readwrite("seed", &TrainConfig::seed)
      .def_readwrite("tolerance", &TrainConfig::tolerance)
      .def_readwrite("patience", &TrainConfig::patience)
      .def("validate", &TrainConfig::validate);

  py::class_<AutoencoderModel>(m, "AutoencoderModel")
      .def(py::init<std::vector<std::size_t>, std::uint64_t>(), py::arg("schedule"), py::arg("seed"))
      .def_property_readonly("schedule", &AutoencoderModel::schedule)
      .def_property_readonly("parameter_count", &AutoencoderModel::parameter_count)
      .def("encode", [](const AutoencoderModel& model, const Matrix& x) { return encode(model, x); }, py::arg("x"))
      .def("decode", [](const AutoencoderModel& model, const Matrix& z) { return decode(model, z); }, py::arg("z"))
      .def("save", [](const AutoencoderModel& model, const std::filesystem::path& p) { save_checkpoint(model, p); },
           py::arg("path"));
  m.def("load_checkpoint", [](const std::filesystem::path& p) { return load_checkpoint(p); }, py::arg("path"));
  m.def("layer_schedule", &layer_schedule, py::arg("input_width"), py::arg("embedding_width"));
  m.def("grad_check", &grad_check, py::arg("model"), py::arg("x"), py::arg("upstream"), py::arg("gamma"),
        py::arg("epsilon") = 1e-5, py::arg("recon_weight") = 1.0);
  m.def("masked_loss", py::overload_cast<const Matrix&, const Matrix&, double>(&latte::masked_loss), py::arg("x"),
        py::arg("x_hat"), py::arg("gamma"));

  py::class_<TrainResult>(m, "TrainResult")
      .def_readonly("model", &TrainResult::model)
      .def_readonly("embedding", &TrainResult::embedding)
      .def_readonly("converged", &TrainResult::converged)
      .def_property_readonly("history", [](const TrainResult& r) {
        py::list out;
        for (const LossRecord& rec : r.history) out.append(loss_dict(rec));
        return out;
      });
  m.def(
      "train",
      [](const HetGraph& g, const TrainConfig& cfg, std::optional<CascadeSet> cascades) {
        py::gil_scoped_release release;
        const FeatureMatrix f = combined_features(g, build_vocab(g));
        return train(g, f, graph_proximity(g, cfg.max_order), cascades ? &*cascades : nullptr, cfg);
      },
      py::arg("graph"), py::arg("config"), py::arg("cascades") = py::none());

  m.def(
      "run_community",
      [](const HetGraph& g, const TrainConfig& cfg, std::optional<std::vector<int>> truth) {
        std::optional<CommunityAssignment> t;
        if (truth) t = assignment(*truth, 0);
        CommunityRun run;
        {
          py::gil_scoped_release release;
          run = run_community(g, cfg, t ? &*t : nullptr);
        }
        py::dict out;
        out["labels"] = run.assignment.labels;
        out["metrics"] = metrics_dict(run.metrics);
        out["embedding"] = run.training.embedding;
        return out;
      },
      py::arg("graph"), py::arg("config"), py::arg("truth") = py::none());

  py::class_<DiffusionConfig>(m, "DiffusionConfig")
      .def(py::init<>())
      .def_readwrite("sample_ratio", &DiffusionConfig::sample_ratio)
      .def_readwrite("folds", &DiffusionConfig::folds)
      .def_readwrite("folds_to_run", &DiffusionConfig::folds_to_run)
      .def_readwrite("negative_ratio", &DiffusionConfig::negative_ratio)
      .def_readwrite("top_k", &DiffusionConfig::top_k);
  m.def(
      "run_diffusion",
      [](const HetGraph& g, const CascadeSet& cascades, const TrainConfig& cfg, const DiffusionConfig& d,
         std::size_t jobs) {
        DiffusionRun run;
        {
          py::gil_scoped_release release;
          run = run_diffusion(g, cascades, cfg, d, jobs);
        }
        py::dict out;
        out["mean_auc"] = run.mean_auc;
        out["mean_precision"] = run.mean_precision;
        py::list folds;
        for (const FoldResult& f : run.folds)
          folds.append(py::dict(py::arg("fold") = f.fold, py::arg("auc") = f.auc, py::arg("precision") = f.precision));
        out["folds"] = folds;
        return out;
      },
      py::arg("graph"), py::arg("cascades"), py::arg("config"), py::arg("diffusion") = DiffusionConfig{},
      py::arg("jobs") = 1);

  m.def(
      "kmeans", [](const Matrix& pts, int k, std::uint64_t seed) { return kmeans(pts, k, seed).assignment.labels; },
      py::arg("points"), py::arg("k"), py::arg("seed") = 1);
  m.def(
      "ncut",
      [](const std::vector<int>& labels, const Matrix& adj) {
        return ncut(assignment(labels, 0), SparseMatrix(adj.sparseView()));
      },
      py::arg("labels"), py::arg("adjacency"));
  m.def(
      "density",
      [](const std::vector<int>& labels, const Matrix& adj) {
        return density(assignment(labels, 0), SparseMatrix(adj.sparseView()));
      },
      py::arg("labels"), py::arg("adjacency"));
  m.def(
      "ndbi", [](const std::vector<int>& labels, const Matrix& p) { return ndbi(assignment(labels, 0), p); },
      py::arg("labels"), py::arg("proximity"));
  m.def(
      "silhouette",
      [](const std::vector<int>& labels, const Matrix& p) { return silhouette(assignment(labels, 0), p); },
      py::arg("labels"), py::arg("proximity"));
  m.def(
      "entropy", [](const std::vector<int>& labels) { return entropy(assignment(labels, 0)); }, py::arg("labels"));
  m.def(
      "adjusted_rand_index",
      [](const std::vector<int>& a, const std::vector<int>& b) {
        return adjusted_rand_index(assignment(a, 0), assignment(b, 0));
      },
      py::arg("a"), py::arg("b"));
  m.def(
      "auc", [](const std::vector<double>& s, const std::vector<bool>& y) { return auc(s, as_flags(y)); },
      py::arg("scores"), py::arg("labels"));
  m.def(
      "precision_at_k",
      [](const std::vector<double>& s, const std::vector<bool>& y, std::size_t k) {
        return precision_at_k(s, as_flags(y), k);
      },
      py::arg("scores"), py::arg("labels"), py::arg("k") = 100);

  m.def(
      "load_config",
      [](const std::filesystem::path& p) { return to_json(build_run_config(ConfigFile::load(p))).dump(); },
      py::arg("path"), "Validated config as a JSON string.");
}
