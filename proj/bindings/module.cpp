#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>
#include <string>
#include <vector>

#include "privrec/attack.hpp"
#include "privrec/dataset.hpp"
#include "privrec/functional_mechanism.hpp"
#include "privrec/ldp.hpp"
#include "privrec/metrics.hpp"
#include "privrec/pipeline.hpp"
#include "privrec/report.hpp"
#include "privrec/synthetic.hpp"

namespace py = pybind11;
using namespace privrec;

namespace {

py::array_t<double> to_numpy(const FeatureMatrix& m) {
  py::array_t<double> out({m.rows, m.cols});
  std::memcpy(out.mutable_data(), m.data.data(), m.data.size() * sizeof(double));
  return out;
}

FeatureMatrix from_numpy(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 2) throw std::invalid_argument("expected a 2-d array");
  FeatureMatrix m(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)));
  std::memcpy(m.data.data(), a.data(), m.data.size() * sizeof(double));
  return m;
}

std::vector<RankedList> lists_from_py(const std::vector<std::vector<int>>& recs) {
  std::vector<RankedList> out(recs.size());
  for (size_t u = 0; u < recs.size(); ++u) {
    out[u].user = static_cast<int>(u);
    out[u].items = recs[u];
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_privrec, m) {
  m.doc() = "Privacy-preserving GCN recommender toolkit";

  py::class_<Dataset>(m, "Dataset")
      .def_property_readonly("num_users", [](const Dataset& d) { return d.graph.num_users; })
      .def_property_readonly("num_items", [](const Dataset& d) { return d.graph.num_items; })
      .def_property_readonly("num_interactions",
                             [](const Dataset& d) { return d.raw.interactions.size(); });

  m.def(
      "generate_dataset",
      [](const std::string& out_dir, uint64_t seed, int users, int items, int ratings,
         double gender_signal, double age_signal, double occupation_signal) {
        SyntheticConfig cfg;
        cfg.seed = seed;
        cfg.num_users = users;
        cfg.num_items = items;
        cfg.num_ratings = ratings;
        cfg.gender_signal = gender_signal;
        cfg.age_signal = age_signal;
        cfg.occupation_signal = occupation_signal;
        write_dataset(cfg, out_dir);
      },
      py::arg("out_dir"), py::arg("seed") = 9000, py::arg("users") = 943,
      py::arg("items") = 1682, py::arg("ratings") = 100000,
      py::arg("gender_signal") = 0.32, py::arg("age_signal") = 0.9,
      py::arg("occupation_signal") = 0.8,
      "Write a MovieLens-100K-shaped u.data/u.user pair");

  m.def(
      "load_dataset", [](const std::string& dir) { return load_dataset(dir); },
      py::arg("dir"));

  m.def(
      "engineer_features",
      [](const std::string& data_dir, double split_ratio, uint64_t seed) {
        const Dataset ds = load_dataset(data_dir);
        const PreparedData prep = prepare_data(ds, split_ratio, seed);
        return py::make_tuple(to_numpy(prep.features), schema_to_json(prep.schema));
      },
      py::arg("data_dir"), py::arg("split_ratio") = 0.8, py::arg("seed") = 1,
      "Normalized user features plus the schema as JSON");

  m.def(
      "perturb_feature_matrix",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& x,
         const std::string& schema_json, double epsilon_local, uint64_t seed) {
        const FeatureSchema schema = schema_from_json(schema_json);
        return to_numpy(perturb_feature_matrix(from_numpy(x), schema, epsilon_local,
                                               Rng(seed).fork(2)));
      },
      py::arg("features"), py::arg("schema_json"), py::arg("epsilon_local"),
      py::arg("seed"));

  m.def(
      "piecewise_params",
      [](double epsilon) {
        const PiecewiseParams p = piecewise_params(epsilon);
        return py::make_tuple(p.C, p.p, p.high_prob);
      },
      py::arg("epsilon"), "Returns (C, p, high-region probability)");

  m.def(
      "piecewise_perturb",
      [](double x, double epsilon, uint64_t seed) {
        Rng rng(seed);
        return piecewise_perturb(x, piecewise_params(epsilon), rng);
      },
      py::arg("x"), py::arg("epsilon"), py::arg("seed"));

  m.def("choose_zeta", &choose_zeta, py::arg("epsilon_local"), py::arg("d_prime"));
  m.def("global_sensitivity", &global_sensitivity, py::arg("d"));
  m.def("laplace_scale", &laplace_scale, py::arg("d"), py::arg("epsilon"),
        py::arg("dataset_size"));
  m.def("truncated_bpr_approx", &truncated_bpr_approx, py::arg("s"));

  m.def(
      "hit_at_k",
      [](const std::vector<std::vector<int>>& recs,
         const std::vector<std::vector<int>>& test_items, int k, const std::string& mode) {
        return hit_at_k(lists_from_py(recs), test_items, k, hit_mode_from_name(mode));
      },
      py::arg("recs"), py::arg("test_items"), py::arg("k"), py::arg("mode") = "user");

  m.def(
      "ndcg_at_k",
      [](const std::vector<std::vector<int>>& recs,
         const std::vector<std::vector<int>>& test_items, int k) {
        return ndcg_at_k(lists_from_py(recs), test_items, k);
      },
      py::arg("recs"), py::arg("test_items"), py::arg("k"));

  m.def(
      "f1_score",
      [](const std::vector<int>& predictions, const std::vector<int>& labels,
         int num_classes, const std::string& average) {
        return f1_score(predictions, labels, num_classes, f1_average_from_name(average));
      },
      py::arg("predictions"), py::arg("labels"), py::arg("num_classes"),
      py::arg("average") = "weighted");

  m.def(
      "run_experiment",
      [](const std::string& data_dir, const std::string& variant, uint64_t seed, int epochs,
         int dim, double lr, int batch, double gamma, double epsilon, double epsilon_local,
         double sigma_init, int neighbor_cap, int inference_cap, double split_ratio,
         double attack_split, const std::vector<int>& k_list,
         const std::vector<std::string>& attributes,
         const std::vector<std::string>& attackers) {
        const Dataset ds = load_dataset(data_dir);
        PipelineOptions opt;
        opt.variant = variant;
        opt.train.seed = seed;
        opt.train.epochs = epochs;
        opt.train.d = dim;
        opt.train.lr = lr;
        opt.train.batch_size = batch;
        opt.train.gamma = gamma;
        opt.train.epsilon = epsilon;
        opt.train.epsilon_local = epsilon_local;
        opt.train.sigma_init = sigma_init;
        opt.train.neighbor_cap = neighbor_cap;
        opt.infer.neighbor_cap = inference_cap;
        opt.split_ratio = split_ratio;
        opt.attack_split = attack_split;
        opt.k_list = k_list;
        opt.attributes.clear();
        for (const auto& a : attributes) opt.attributes.push_back(attribute_from_name(a));
        opt.attackers.clear();
        for (const auto& a : attackers) opt.attackers.push_back(attacker_from_name(a));
        return report_to_json(run_experiment(ds, opt).report);
      },
      py::arg("data_dir"), py::arg("variant") = "gerai", py::arg("seed") = 1,
      py::arg("epochs") = 3, py::arg("dim") = 60, py::arg("lr") = 0.005,
      py::arg("batch") = 64, py::arg("gamma") = 0.01, py::arg("epsilon") = 0.4,
      py::arg("epsilon_local") = 20.0, py::arg("sigma_init") = 0.3,
      py::arg("neighbor_cap") = 10, py::arg("inference_cap") = 200,
      py::arg("split_ratio") = 0.8, py::arg("attack_split") = 0.8,
      py::arg("k_list") = std::vector<int>{5, 10},
      py::arg("attributes") = std::vector<std::string>{"gender"},
      py::arg("attackers") = std::vector<std::string>{"nn"},
      "Full train/recommend/attack pipeline; returns the metrics report as JSON");
}
