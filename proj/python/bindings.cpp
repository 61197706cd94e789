#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "altgrad/analysis.hpp"
#include "altgrad/experiments.hpp"
#include "altgrad/sampling_tree.hpp"

namespace py = pybind11;
using namespace altgrad;

namespace {

BanditTask make_task(const Vec& rewards, double sigma) { return BanditTask(rewards, sigma); }

EstimatorKind parse_estimator(const std::string& s) { return estimator_from_string(s); }

BaselineMode parse_baseline(const std::string& s) {
  if (s == "true") return BaselineMode::TrueValue;
  if (s == "learned") return BaselineMode::Learned;
  if (s == "frozen") return BaselineMode::Frozen;
  throw ConfigError("unknown baseline '" + s + "' (expected true, learned or frozen)");
}

py::dict series_dict(const RunSeries& s) {
  py::dict d;
  d["x"] = s.x;
  d["y"] = s.y;
  d["entropy"] = s.entropy;
  d["baseline"] = s.baseline;
  d["final_metric"] = s.final_metric;
  d["pre_metric"] = s.pre_metric;
  return d;
}

// holds the rng a tree samples from, so Python callers only pass a seed once
struct PyTree {
  SamplingTree tree;
  RngStream rng;
};

}  // namespace

PYBIND11_MODULE(_altgrad, m) {
  m.doc() = "Gradient-bandit, chain and sampling-tree routines from the altgrad C++ core";

  m.def("softmax", [](const Vec& th) { return Vec(softmax(th).probs()); }, py::arg("theta"));
  m.def("softmax_jacobian", [](const Vec& pi) { return softmax_jacobian(PolicyVector(pi)); },
        py::arg("pi"));
  m.def("entropy", [](const Vec& pi) { return entropy(PolicyVector(pi)); }, py::arg("pi"));
  m.def("kl_to_softmax",
        [](const Vec& p, const Vec& th) { return kl_divergence_to_softmax(PolicyVector(p), th); },
        py::arg("p"), py::arg("theta"), "KL(p || softmax(theta)), computed in log space");

  m.def("bandit_objective",
        [](const Vec& pi, const Vec& r) { return bandit_objective(PolicyVector(pi), make_task(r, 0)); },
        py::arg("pi"), py::arg("rewards"));
  m.def(
      "biased_fixed_point",
      [](const Vec& r, double b) -> py::dict {
        py::dict d;
        auto fp = biased_fixed_point(make_task(r, 0), b);
        if (auto* in = std::get_if<InteriorFixedPoint>(&fp)) {
          d["kind"] = "interior";
          d["pi"] = Vec(in->pi.probs());
        } else if (auto* face = std::get_if<SimplexFace>(&fp)) {
          d["kind"] = "face";
          d["actions"] = face->actions;
        } else {
          d["kind"] = "none";
        }
        return d;
      },
      py::arg("rewards"), py::arg("b"));
  m.def(
      "max_attractor_stepsize",
      [](const Vec& pi, const Vec& r, double b) {
        return max_attractor_stepsize(PolicyVector(pi), make_task(r, 0), b);
      },
      py::arg("pi"), py::arg("rewards"), py::arg("b"));
  m.def(
      "biased_update_step",
      [](const Vec& th, const Vec& r, double b, double alpha) {
        return Vec(biased_update_step(th, make_task(r, 0), b, alpha));
      },
      py::arg("theta"), py::arg("rewards"), py::arg("b"), py::arg("alpha"));
  m.def(
      "kl_series",
      [](const Vec& r, const Vec& th0, double b, double alpha, int steps) {
        return kl_series(make_task(r, 0), th0, b, alpha, steps);
      },
      py::arg("rewards"), py::arg("theta0"), py::arg("b"), py::arg("alpha"), py::arg("steps"));
  m.def(
      "estimator_variance",
      [](const Vec& pi, const Vec& r, double sigma, double b, const std::string& est) {
        if (est != "REG" && est != "ALT") throw ConfigError("estimator must be REG or ALT");
        PolicyVector p(pi);
        Vec eta = est == "REG" ? Vec(p.probs()) : Vec(Vec::Zero(pi.size()));
        return estimator_variance(p, make_task(r, sigma), b, eta);
      },
      py::arg("pi"), py::arg("rewards"), py::arg("sigma"), py::arg("b"), py::arg("estimator"));

  m.def(
      "run_bandit",
      [](const Vec& r, double sigma, const std::string& estimator, const std::string& baseline,
         double alpha, double beta, double b0, const Vec& init, int steps, std::uint64_t seed) {
        BanditCell c;
        c.init = init;
        c.agent.estimator = parse_estimator(estimator);
        c.agent.alpha = alpha;
        c.agent.baseline = {parse_baseline(baseline), b0, beta};
        RunSeries s;
        {
          py::gil_scoped_release release;
          s = run_bandit(make_task(r, sigma), c, steps, seed);
        }
        return series_dict(s);
      },
      py::arg("rewards"), py::arg("sigma"), py::arg("estimator"), py::arg("baseline"),
      py::arg("alpha"), py::arg("beta") = 0.1, py::arg("b0") = 0.0, py::arg("init"),
      py::arg("steps"), py::arg("seed"),
      "One gradient-bandit run; y holds the exact objective after each step.");

  m.def("run_seed", &run_seed, py::arg("base"), py::arg("cell_id"), py::arg("run"));

  m.def(
      "chain_exact_values",
      [](const Mat& pi, int num_actions) {
        ExactValues ev = exact_values(chain_model(num_actions), pi);
        return py::make_tuple(ev.v, ev.q);
      },
      py::arg("pi"), py::arg("num_actions") = 2, "(v, q) for the chain under pi(s, a)");
  m.def(
      "chain_policy_gradient",
      [](const Mat& theta) {
        return exact_policy_gradient(chain_model(static_cast<int>(theta.cols())),
                                     TabularSoftmaxPolicy(theta));
      },
      py::arg("theta"));

  py::class_<PyTree>(m, "SamplingTree")
      .def(py::init([](const Vec& prefs, std::uint64_t seed) {
             RngStream rng(seed, 0);
             std::vector<int> ids(prefs.size());
             for (int i = 0; i < int(ids.size()); ++i) ids[i] = i;
             SamplingTree t = SamplingTree::build(ids, prefs, rng);
             return PyTree{std::move(t), rng.split(1)};
           }),
           py::arg("prefs"), py::arg("seed") = 0)
      .def("sample", [](PyTree& t) { return t.tree.sample(t.rng); })
      .def("update", [](PyTree& t, int a, double th) { t.tree.update_preference(a, th); },
           py::arg("action"), py::arg("theta"))
      .def("select", [](const PyTree& t, double x) { return t.tree.select(x); }, py::arg("x"))
      .def_property_readonly("depth", [](const PyTree& t) { return t.tree.depth(); })
      .def_property_readonly("total_weight", [](const PyTree& t) { return t.tree.total_weight(); })
      .def_property_readonly("last_sample_visits",
                             [](const PyTree& t) { return t.tree.last_sample_visits(); })
      .def_property_readonly("last_update_visits",
                             [](const PyTree& t) { return t.tree.last_update_visits(); })
      .def("__len__", [](const PyTree& t) { return t.tree.size(); });
}
