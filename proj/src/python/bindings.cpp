#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "vanet/baselines.hpp"
#include "vanet/config.hpp"
#include "vanet/errors.hpp"
#include "vanet/harness.hpp"
#include "vanet/mobility.hpp"
#include "vanet/netgraph.hpp"
#include "vanet/optimizer.hpp"

namespace py = pybind11;
using namespace vanet;

namespace {

py::dict record_dict(const StepRecord& r) {
  py::dict d;
  d["step"] = r.metrics.step;
  d["algorithm"] = to_string(r.algorithm);
  d["l_avg"] = r.metrics.l_avg;
  d["mean_delay_s"] = r.metrics.mean_delay_s;
  d["throughput_mbps"] = r.metrics.throughput_mbps;
  d["connectivity_rate"] = r.metrics.connectivity_rate;
  d["pair_count"] = r.metrics.pair_count;
  d["mode"] = r.mode;
  d["q"] = r.q;
  d["delta"] = r.delta;
  d["applied"] = r.applied;
  return d;
}

py::dict summary_dict(const MetricSummary& s) {
  py::dict d;
  if (!s.present) return d;
  d["count"] = s.count;
  d["min"] = s.min;
  d["q1"] = s.q1;
  d["median"] = s.median;
  d["q3"] = s.q3;
  d["max"] = s.max;
  d["mean"] = s.mean;
  d["stddev"] = s.stddev;
  return d;
}

py::dict result_dict(const ExperimentResult& r) {
  py::dict d;
  d["algorithm"] = to_string(r.algorithm);
  py::list steps;
  for (const auto& s : r.steps) steps.append(record_dict(s));
  d["steps"] = steps;
  py::dict summary;
  summary["records"] = r.summary.records;
  summary["warmup"] = r.summary.warmup;
  summary["l_avg"] = summary_dict(r.summary.l_avg);
  summary["mean_delay_s"] = summary_dict(r.summary.mean_delay_s);
  summary["throughput_mbps"] = summary_dict(r.summary.throughput_mbps);
  summary["connectivity_rate"] = summary_dict(r.summary.connectivity_rate);
  const auto& fit = r.summary.path_vs_connectivity;
  summary["path_vs_connectivity_r"] = fit.present ? py::cast(fit.r) : py::none();
  d["summary"] = summary;
  return d;
}

}  // namespace

PYBIND11_MODULE(_vanet, m) {
  m.doc() = "VANET topology simulation core";

  auto base = py::register_exception<Error>(m, "VanetError", PyExc_RuntimeError);
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<OrderingError>(m, "OrderingError", base.ptr());
  py::register_exception<FieldError>(m, "FieldError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<PlacementError>(m, "PlacementError", base.ptr());
  py::register_exception<LookupError>(m, "LookupError", base.ptr());
  py::register_exception<ShapeError>(m, "ShapeError", base.ptr());
  py::register_exception<InvalidPathError>(m, "InvalidPathError", base.ptr());
  py::register_exception<ConstraintViolation>(m, "ConstraintViolation", base.ptr());

  py::enum_<Algorithm>(m, "Algorithm")
      .value("hierarchical", Algorithm::hierarchical)
      .value("greedy", Algorithm::greedy)
      .value("shortest_path", Algorithm::shortest_path)
      .value("motif", Algorithm::motif);

  py::class_<VehicleState>(m, "VehicleState")
      .def(py::init<>())
      .def(py::init([](std::string id, double x, double y, double speed, double heading) {
             return VehicleState{std::move(id), x, y, speed, heading};
           }),
           py::arg("id"), py::arg("x"), py::arg("y"), py::arg("speed") = 0.0, py::arg("heading") = 0.0)
      .def_readwrite("id", &VehicleState::id)
      .def_readwrite("x", &VehicleState::x)
      .def_readwrite("y", &VehicleState::y)
      .def_readwrite("speed", &VehicleState::speed)
      .def_readwrite("heading", &VehicleState::heading)
      .def(py::self == py::self)
      .def("__repr__", [](const VehicleState& v) {
        std::ostringstream s;
        s << "VehicleState(" << v.id << ", x=" << v.x << ", y=" << v.y << ", speed=" << v.speed
          << ", heading=" << v.heading << ")";
        return s.str();
      });

  py::class_<RsuNode>(m, "RsuNode")
      .def(py::init<>())
      .def(py::init([](std::string id, double x, double y, double capacity) {
             return RsuNode{std::move(id), x, y, capacity};
           }),
           py::arg("id"), py::arg("x"), py::arg("y"), py::arg("bandwidth_capacity") = 100.0)
      .def_readwrite("id", &RsuNode::id)
      .def_readwrite("x", &RsuNode::x)
      .def_readwrite("y", &RsuNode::y)
      .def_readwrite("bandwidth_capacity", &RsuNode::bandwidth_capacity)
      .def(py::self == py::self);

  py::class_<NetworkSnapshot>(m, "NetworkSnapshot")
      .def(py::init<>())
      .def_readwrite("step", &NetworkSnapshot::step)
      .def_readwrite("time_s", &NetworkSnapshot::time_s)
      .def_readwrite("step_s", &NetworkSnapshot::step_s)
      .def_readwrite("vehicles", &NetworkSnapshot::vehicles)
      .def_readwrite("rsus", &NetworkSnapshot::rsus)
      .def(py::self == py::self);

  py::class_<LinkLimits>(m, "LinkLimits")
      .def(py::init<>())
      .def_readwrite("v2v_range_m", &LinkLimits::v2v_range_m)
      .def_readwrite("v2i_range_m", &LinkLimits::v2i_range_m)
      .def_readwrite("max_v2v_degree", &LinkLimits::max_v2v_degree)
      .def_readwrite("max_v2i_degree", &LinkLimits::max_v2i_degree);

  py::class_<LinkStrategy>(m, "LinkStrategy")
      .def(py::init<>())
      .def_readonly("v2v", &LinkStrategy::v2v)
      .def_readonly("v2i", &LinkStrategy::v2i)
      .def_readonly("v2i_bandwidth", &LinkStrategy::v2i_bandwidth)
      .def("add_v2v", &LinkStrategy::add_v2v)
      .def("add_v2i", &LinkStrategy::add_v2i)
      .def("has_v2v", &LinkStrategy::has_v2v)
      .def("link_count", &LinkStrategy::link_count)
      .def(py::self == py::self);

  py::class_<SolverParams>(m, "SolverParams")
      .def(py::init<>())
      .def_readwrite("xi", &SolverParams::xi)
      .def_readwrite("zeta", &SolverParams::zeta)
      .def_readwrite("q0", &SolverParams::q0)
      .def_readwrite("delta0", &SolverParams::delta0)
      .def_readwrite("k_min", &SolverParams::k_min)
      .def_readwrite("exact_max_vehicles", &SolverParams::exact_max_vehicles);

  py::class_<ExperimentConfig>(m, "ExperimentConfig")
      .def(py::init<>())
      .def_readwrite("steps", &ExperimentConfig::steps)
      .def_readwrite("seed", &ExperimentConfig::seed)
      .def_readwrite("algorithm", &ExperimentConfig::algorithm)
      .def_readwrite("warmup_steps", &ExperimentConfig::warmup_steps)
      .def_readwrite("rsu_count", &ExperimentConfig::rsu_count)
      .def_readwrite("limits", &ExperimentConfig::limits)
      .def_readwrite("solver", &ExperimentConfig::solver)
      .def_readwrite("output_dir", &ExperimentConfig::output_dir);

  m.def("load_config", &load_config, py::arg("path"), "Load and validate a config file.");
  m.def(
      "parse_config",
      [](const std::string& text, const std::filesystem::path& base_dir) {
        std::istringstream in(text);
        return parse_config(in, base_dir);
      },
      py::arg("text"), py::arg("base_dir") = std::filesystem::path{}, "Parse and validate config text.");
  m.def("config_keys", &config_keys, "Every accepted section.key name.");

  m.def(
      "parse_trace",
      [](const std::string& text, const std::string& format) {
        std::istringstream in(text);
        return parse_fcd_trace(in, format == "csv" ? TraceFormat::csv : TraceFormat::fcd_xml);
      },
      py::arg("text"), py::arg("format") = "fcd_xml", "Parse an FCD XML or CSV trace into snapshots.");
  m.def(
      "write_csv_trace",
      [](const std::vector<NetworkSnapshot>& snaps) {
        std::ostringstream out;
        write_csv_trace(out, snaps);
        return out.str();
      },
      py::arg("snapshots"));

  m.def("build_scenario", &build_scenario, py::arg("config"), py::call_guard<py::gil_scoped_release>());
  m.def("runnable_steps", &runnable_steps, py::arg("config"), py::arg("snapshot_count"));

  m.def(
      "run_experiment",
      [](const ExperimentConfig& c, std::optional<std::vector<NetworkSnapshot>> snaps) {
        ExperimentResult r;
        {
          py::gil_scoped_release release;
          r = snaps ? run_experiment(c, *snaps) : run_experiment(c);
        }
        return result_dict(r);
      },
      py::arg("config"), py::arg("snapshots") = py::none(),
      "Run the configured algorithm; returns per-step records and a summary.");
  m.def(
      "compare",
      [](const ExperimentConfig& c, const std::filesystem::path& out_dir, unsigned threads) {
        std::vector<ExperimentResult> rs;
        {
          py::gil_scoped_release release;
          rs = compare_to_directory(c, out_dir, threads);
        }
        py::list out;
        for (const auto& r : rs) out.append(result_dict(r));
        return out;
      },
      py::arg("config"), py::arg("out_dir"), py::arg("threads") = 0,
      "Run all four algorithms and write their CSV files under out_dir.");

  m.def("link_adaptability", &link_adaptability, py::arg("a"), py::arg("b"), py::arg("alpha") = 0.7);
  m.def("complexity", py::overload_cast<int, double, const SolverParams&>(&complexity), py::arg("vehicle_count"),
        py::arg("link_density"), py::arg("params") = SolverParams{});
  m.def(
      "select_mode",
      [](int vehicle_count, double link_density) {
        return std::string(to_string(select_mode(vehicle_count, link_density, SolverParams{})));
      },
      py::arg("vehicle_count"), py::arg("link_density"));
  m.def("predict_link_lifetime",
        py::overload_cast<const VehicleState&, const VehicleState&, double, double, int>(&predict_link_lifetime),
        py::arg("a"), py::arg("b"), py::arg("range_m"), py::arg("step_s"), py::arg("horizon_cycles") = 100);

}
