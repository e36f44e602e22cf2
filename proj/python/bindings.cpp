#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "ccncheck/errors.hpp"
#include "ccncheck/harness.hpp"
#include "ccncheck/names.hpp"
#include "ccncheck/recovery.hpp"

namespace py = pybind11;
using namespace ccncheck;

namespace {

std::vector<CheckReport> verify_paths(const std::filesystem::path& trace, const std::filesystem::path& store) {
  return verify_run(Trace::read_jsonl(trace), SnapshotStore(store));
}

py::tuple equivalence_paths(const std::filesystem::path& reference, const std::filesystem::path& faulty) {
  auto rep = check_output_equivalence(Trace::read_jsonl(reference), Trace::read_jsonl(faulty));
  return py::make_tuple(rep.equal, rep.first_divergence);
}

}  // namespace

PYBIND11_MODULE(_ccncheck, m) {
  m.doc() = "Checkpoint/restart simulator over a content-centric network";

  auto error = py::register_exception<Error>(m, "Error");
  py::register_exception<MalformedName>(m, "MalformedName", error.ptr());
  py::register_exception<NoCheckpoint>(m, "NoCheckpoint", error.ptr());
  py::register_exception<ScenarioError>(m, "ScenarioError", error.ptr());
  py::register_exception<CheckpointInProgress>(m, "CheckpointInProgress", error.ptr());

  py::enum_<Signal>(m, "Signal")
      .value("RTS", Signal::Rts)
      .value("CTS", Signal::Cts)
      .value("CHECK", Signal::Check)
      .value("FLUSH", Signal::Flush)
      .value("DATA", Signal::Data)
      .value("DISCOVER", Signal::Discover);

  py::class_<CheckMarker> marker(m, "CheckMarker");
  py::enum_<CheckMarker::Phase>(marker, "Phase")
      .value("SUSPEND", CheckMarker::Phase::Suspend)
      .value("SNAPSHOT", CheckMarker::Phase::Snapshot)
      .value("RESUME", CheckMarker::Phase::Resume);
  marker.def(py::init([](CheckMarker::Phase phase, std::uint64_t epoch) { return CheckMarker{phase, epoch}; }),
             py::arg("phase"), py::arg("epoch"))
      .def_readwrite("phase", &CheckMarker::phase)
      .def_readwrite("epoch", &CheckMarker::epoch)
      .def("__eq__", [](const CheckMarker& a, const CheckMarker& b) { return a == b; })
      .def("__str__", &format_marker);

  py::class_<StructuredName>(m, "StructuredName")
      .def(py::init<>())
      .def_readwrite("app", &StructuredName::app)
      .def_readwrite("receiver", &StructuredName::receiver)
      .def_readwrite("signal", &StructuredName::signal)
      .def_readwrite("sender", &StructuredName::sender)
      .def_readwrite("appended", &StructuredName::appended)
      .def_readwrite("marker", &StructuredName::marker)
      .def_static("rts", &StructuredName::rts)
      .def_static("cts", &StructuredName::cts)
      .def_static("check", &StructuredName::check, py::arg("app"), py::arg("receiver"),
                  py::arg("marker") = std::nullopt)
      .def_static("flush", &StructuredName::flush)
      .def_static("discover", &StructuredName::discover)
      .def("__eq__", [](const StructuredName& a, const StructuredName& b) { return a == b; })
      .def("__str__", &format_name)
      .def("__repr__", [](const StructuredName& n) { return "StructuredName('" + format_name(n) + "')"; });

  m.def("format_name", &format_name);
  m.def("parse_name", &parse_name);
  m.def("escape_component", &escape_component);
  m.def("unescape_component", &unescape_component);

  py::class_<ScenarioEvent>(m, "ScenarioEvent")
      .def(py::init([](Tick at, std::string action, std::string target, Tick stagger) {
             return ScenarioEvent{at, std::move(action), std::move(target), stagger};
           }),
           py::arg("at"), py::arg("action"), py::arg("target") = "", py::arg("stagger") = 0)
      .def_readwrite("at", &ScenarioEvent::at)
      .def_readwrite("action", &ScenarioEvent::action)
      .def_readwrite("target", &ScenarioEvent::target)
      .def_readwrite("stagger", &ScenarioEvent::stagger);

  py::class_<Scenario>(m, "Scenario")
      .def_readwrite("name", &Scenario::name)
      .def_readwrite("seed", &Scenario::seed)
      .def_readwrite("app", &Scenario::app)
      .def_readwrite("steps", &Scenario::steps)
      .def_readwrite("processes", &Scenario::processes)
      .def_readwrite("coordinator", &Scenario::coordinator)
      .def_readwrite("events", &Scenario::events)
      .def("validate", &Scenario::validate)
      .def("to_json", [](const Scenario& s) { return to_json(s).dump(); });

  m.def("load_scenario", &load_scenario, py::arg("path"));
  m.def(
      "scenario_from_json", [](const std::string& text) { return scenario_from_json(Json::parse(text)); },
      py::arg("text"));
  m.def("fibonacci_scenario", &fibonacci_scenario, py::arg("seed"), py::arg("ring") = 3, py::arg("steps") = 20);
  m.def("counter_scenario", &counter_scenario, py::arg("seed"), py::arg("instances") = 3, py::arg("steps") = 30);

  py::class_<CheckReport>(m, "CheckReport")
      .def_readonly("property", &CheckReport::property)
      .def_readonly("checked", &CheckReport::checked)
      .def_readonly("violations", &CheckReport::violations)
      .def_property_readonly("ok", &CheckReport::ok)
      .def("__repr__", [](const CheckReport& r) {
        return "CheckReport(" + r.property + ", checked=" + std::to_string(r.checked) +
               ", violations=" + std::to_string(r.violations.size()) + ")";
      });

  py::class_<RunResult>(m, "RunResult")
      .def_readonly("out_dir", &RunResult::out_dir)
      .def_readonly("store_dir", &RunResult::store_dir)
      .def_readonly("trace_file", &RunResult::trace_file)
      .def_property_readonly("event_count", [](const RunResult& r) { return r.trace.size(); });

  m.def("run_scenario", &run_scenario, py::arg("scenario"), py::arg("out_dir"),
        "Run a scenario and write trace.jsonl and store/ under out_dir.");
  m.def("evaluate_run", &evaluate_run, py::arg("scenario"), py::arg("run"), py::arg("oracle_dir"));
  m.def("verify", &verify_paths, py::arg("trace"), py::arg("store"),
        "Check a recorded trace against its snapshot store.");
  m.def("check_output_equivalence", &equivalence_paths, py::arg("reference"), py::arg("faulty"),
        "Compare deduplicated outputs of two trace files; returns (equal, first_divergence).");

  py::class_<RestartPlan>(m, "RestartPlan")
      .def_readonly("epoch", &RestartPlan::epoch)
      .def_readonly("processes", &RestartPlan::processes)
      .def_readonly("pending_to_reissue", &RestartPlan::pending_to_reissue);
  m.def(
      "plan_restart",
      [](const std::filesystem::path& store, std::optional<std::uint64_t> epoch) {
        return plan_restart(SnapshotStore(store), epoch);
      },
      py::arg("store"), py::arg("epoch") = std::nullopt);
}
