#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "trdrl/dynamics.hpp"
#include "trdrl/env.hpp"
#include "trdrl/metrics.hpp"
#include "trdrl/nn.hpp"
#include "trdrl/shaping.hpp"
#include "trdrl/trainer.hpp"

#include <sstream>

namespace py = pybind11;
using namespace trdrl;

namespace {

RunConfig config_from_dict(const py::dict& d) {
  RunConfig cfg;
  for (auto item : d) {
    std::string key = py::cast<std::string>(item.first);
    std::string value = py::cast<std::string>(py::str(item.second));
    if (py::isinstance<py::bool_>(item.second))
      value = py::cast<bool>(item.second) ? "true" : "false";
    if (!apply_config_key(cfg, key, value))
      throw std::invalid_argument("unknown config key: " + key);
  }
  return cfg;
}

py::list metrics_to_list(const RunMetrics& metrics) {
  py::list rows;
  for (const MetricRow& r : metrics.rows) {
    py::dict row;
    row["episode"] = r.episode;
    row["task_id"] = r.task_id;
    row["success_rate"] = r.success_rate;
    row["loss_h"] = r.loss_h;
    row["loss_g"] = r.loss_g;
    row["loss_phi_own"] = r.loss_phi_own;
    row["loss_phi_rev"] = r.loss_phi_rev;
    row["filter_accept_rate"] = r.filter_accept_rate;
    row["shaping_mean"] = r.shaping_mean;
    rows.append(row);
  }
  return rows;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Time-reversal symmetry enhanced SAC: C++ core bindings";

  py::class_<EnvSpec>(m, "EnvSpec")
      .def_readonly("id", &EnvSpec::id)
      .def_readonly("pair_id", &EnvSpec::pair_id)
      .def_readonly("reversed", &EnvSpec::reversed)
      .def_readonly("state_dim", &EnvSpec::state_dim)
      .def_readonly("action_dim", &EnvSpec::action_dim)
      .def_readonly("horizon", &EnvSpec::horizon)
      .def_readonly("s_min", &EnvSpec::s_min)
      .def_readonly("s_max", &EnvSpec::s_max)
      .def_readonly("object_indices", &EnvSpec::object_indices)
      .def("range_norm", &EnvSpec::range_norm)
      .def("to_text", &EnvSpec::to_text);

  py::class_<StepOut>(m, "StepOut")
      .def_readonly("next", &StepOut::next)
      .def_readonly("reward", &StepOut::reward)
      .def_readonly("success", &StepOut::success);

  py::class_<Env>(m, "Env")
      .def_property_readonly("spec", &Env::spec)
      .def("reset", &Env::reset, py::arg("seed"))
      .def("step", &Env::step, py::arg("state"), py::arg("action"))
      .def("object_part", &Env::object_part)
      .def("reward_oracle", &Env::reward_oracle, py::arg("x"))
      .def("expert_action", &Env::expert_action, py::arg("state"))
      .def("analytic_reversibility_label", &Env::analytic_reversibility_label,
           py::arg("state"), py::arg("action"), py::arg("next"), py::arg("tol") = 1e-6);

  m.def("make_env", &make_env, py::arg("id"));
  m.def("env_ids", [] { return env_ids(); });
  m.def("pair_ids", [] { return pair_ids(); });
  m.def("pair_tasks", &pair_tasks, py::arg("pair_id"));

  py::class_<DenseNet>(m, "DenseNet")
      .def_readonly("dims", &DenseNet::dims)
      .def("parameter_count", &DenseNet::parameter_count);

  m.def(
      "make_net",
      [](const std::vector<int>& dims, const std::string& hidden,
         const std::string& output, std::uint32_t seed) {
        std::mt19937 rng(seed);
        return make_net(dims, hidden == "relu" ? Activation::Relu : Activation::Tanh,
                        output == "sigmoid" ? OutputActivation::Sigmoid
                                            : OutputActivation::Linear,
                        rng);
      },
      py::arg("dims"), py::arg("hidden") = "tanh", py::arg("output") = "linear",
      py::arg("seed") = 0);
  m.def("net_forward", [](const DenseNet& net, const Vec& x) { return forward(net, x); });

  m.def("label_potentials",
        [](int n, const std::string& scheme, double gamma) {
          return label_potentials(n, parse_label_scheme(scheme), gamma);
        },
        py::arg("n"), py::arg("scheme") = "linear", py::arg("gamma") = 0.99);

  m.def("iqm", [](std::vector<double> values) { return iqm(std::move(values)); });

  m.def(
      "generate_demos",
      [](const std::string& env_id, int count, std::uint64_t seed, int horizon,
         const std::string& out_path) {
        auto env = make_env(env_id);
        auto demos =
            generate_demos(*env, count, seed, horizon > 0 ? horizon : env->spec().horizon);
        if (!out_path.empty()) save_demos(out_path, *env, demos);
        py::list lens;
        for (const auto& t : demos) lens.append(t.length());
        return lens;
      },
      py::arg("env_id"), py::arg("count") = 10, py::arg("seed") = 0,
      py::arg("horizon") = -1, py::arg("out_path") = "");

  m.def(
      "run_training",
      [](const py::dict& config) {
        RunMetrics metrics = run_training(config_from_dict(config));
        return metrics_to_list(metrics);
      },
      py::arg("config"),
      "Run one training configuration; returns the evaluation rows.");

  m.def(
      "run_plain_sac",
      [](const py::dict& config) {
        RunMetrics metrics = run_plain_sac(config_from_dict(config));
        return metrics_to_list(metrics);
      },
      py::arg("config"));

  m.def("default_config", [] {
    std::ostringstream os;
    write_config(RunConfig{}, os);
    py::dict d;
    std::istringstream is(os.str());
    std::string line;
    while (std::getline(is, line)) {
      auto eq = line.find('=');
      if (eq != std::string::npos) d[py::str(line.substr(0, eq))] = line.substr(eq + 1);
    }
    return d;
  });

  m.attr("__version__") = "0.1.0";
}
