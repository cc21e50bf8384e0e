#include "qgame/errors.hpp"
#include "qgame/experiment.hpp"
#include "qgame/graph.hpp"
#include "qgame/io.hpp"
#include "qgame/pi_solver.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>

namespace py = pybind11;
using namespace qgame;

namespace {

// JSON crosses the boundary as text; the Python wrapper handles dicts.
ExperimentConfig config_from(const std::string& text, std::optional<std::uint64_t> seed) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::ParseError, e.what());
  }
  ExperimentConfig cfg = parse_config(j);
  if (seed) cfg.set_seed(*seed);
  return cfg;
}

GameMode mode_from(const std::string& name) { return parse_mode(name); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Distributed zero-sum graphical games: policy iteration and online learning";

  static py::exception<Error> error(m, "QGameError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      PyErr_SetObject(error.ptr(), py::make_tuple(e.what(), kind_name(e.kind()), exit_code(e.kind())).ptr());
    }
  });

  m.def("preset_names", &preset_names);
  m.def("preset_json", [](const std::string& name) { return preset(name).to_json().dump(); });
  m.def("validate_json", [](const std::string& text) { return config_from(text, std::nullopt).to_json().dump(); });

  m.def("simulate_json", [](const std::string& text, const std::string& out, std::optional<std::uint64_t> seed) {
    return run_simulate(config_from(text, seed), out).summary.dump();
  }, py::arg("config"), py::arg("out"), py::arg("seed") = py::none());
  m.def("policy_iteration_json", [](const std::string& text, const std::string& mode, const std::string& out,
                                    std::optional<std::uint64_t> seed) {
    return run_policy_iteration(config_from(text, seed), mode_from(mode), out).summary.dump();
  }, py::arg("config"), py::arg("mode"), py::arg("out"), py::arg("seed") = py::none());
  m.def("learn_json", [](const std::string& text, const std::string& mode, const std::string& out,
                         std::optional<std::uint64_t> seed) {
    return run_learning(config_from(text, seed), mode_from(mode), out).summary.dump();
  }, py::arg("config"), py::arg("mode"), py::arg("out"), py::arg("seed") = py::none());
  m.def("verify_json", [](const std::string& text, const std::string& out, std::optional<std::uint64_t> seed) {
    return run_verify(config_from(text, seed), out).summary.dump();
  }, py::arg("config"), py::arg("out"), py::arg("seed") = py::none());
  m.def("reproduce_json", [](const std::string& which, const std::string& out) {
    if (which != "coop" && which != "noncoop") throw Error(ErrorKind::ValidationError, "case must be coop or noncoop");
    return reproduce_reference(which == "coop" ? ReproCase::coop : ReproCase::noncoop, out).summary.dump();
  }, py::arg("case"), py::arg("out"));
  m.def("trajectory_metrics_json", [](const std::string& csv) {
    return metrics_json(metrics(read_trajectory_csv(csv))).dump();
  }, py::arg("path"));

  py::class_<GraphTopology>(m, "Topology")
      .def(py::init([](const std::vector<std::tuple<int, int, double>>& edges, const std::vector<int>& pins, int n) {
             std::vector<Edge> e;
             for (const auto& [from, to, w] : edges) e.push_back({from, to, w});
             return GraphTopology::build(e, pins, n);
           }),
           py::arg("edges"), py::arg("pins"), py::arg("n_agents"))
      .def_property_readonly("n_agents", &GraphTopology::n_agents)
      .def_property_readonly("adjacency", &GraphTopology::adjacency)
      .def_property_readonly("pinning", &GraphTopology::pinning)
      .def_property_readonly("in_degrees", &GraphTopology::in_degrees)
      .def_property_readonly("laplacian", &GraphTopology::laplacian)
      .def("neighbors", &GraphTopology::neighbors)
      .def("neighborhood_error", [](const GraphTopology& t, const std::vector<Vec>& followers, const Vec& leader,
                                    int i) { return neighborhood_error(t, followers, leader, i); })
      .def("pinned_min_singular_value", [](const GraphTopology& t) { return pinned_min_singular_value(t); });

  m.def("zero_sum_riccati", &zero_sum_riccati, py::arg("A"), py::arg("B"), py::arg("E"), py::arg("Q"), py::arg("R"),
        py::arg("T"), py::arg("attenuation"), py::arg("tol") = 1e-13, py::arg("max_iter") = 200000);
}
