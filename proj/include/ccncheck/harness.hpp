#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ccncheck/analysis.hpp"
#include "ccncheck/checkpoint.hpp"
#include "ccncheck/process.hpp"

namespace ccncheck {

struct ScenarioEvent {
  Tick at = 0;
  /// "checkpoint" | "crash" | "restart_all" | "restart"
  std::string action;
  /// crash: a node id or "all"; restart: a router or the coordinator.
  std::string target;
  /// restart_all: ticks between consecutive process restarts.
  Tick stagger = 0;
};

struct ScenarioConfig {
  Tick tick_interval = 5;
  /// Counter instances start at 1 + (seeded draw mod start_jitter).
  Tick start_jitter = 10;
  FabricConfig fabric;
  CheckpointConfig checkpoint;
  RecoveryConfig recovery;
};

struct Scenario {
  std::string name = "scenario";
  std::uint64_t seed = 0;
  std::string app = "fibonacci";  // or "counter"
  std::uint64_t steps = 20;
  Topology topology;
  std::vector<NodeId> processes;
  NodeId coordinator = "coord";
  std::vector<ScenarioEvent> events;
  ScenarioConfig config;

  /// Name component for the application namespace.
  std::string ns() const { return app == "fibonacci" ? "fib" : app; }
  void validate() const;
};

/// Reads a scenario; relative topology file paths resolve against `base`.
Scenario scenario_from_json(const Json& j, const std::filesystem::path& base = {});
Scenario load_scenario(const std::filesystem::path& file);
Json to_json(const Scenario& s);

/// A star of `processes` + coordinator around router "r0", seeded latencies.
Scenario fibonacci_scenario(std::uint64_t seed, std::size_t ring = 3, std::uint64_t steps = 20);
Scenario counter_scenario(std::uint64_t seed, std::size_t instances = 3, std::uint64_t steps = 30);

struct RunResult {
  Trace trace;
  std::filesystem::path out_dir;
  std::filesystem::path store_dir;
  std::filesystem::path trace_file;
};

/// Builds the fabric, boots coordinator and processes, plays the events,
/// runs to quiescence and writes <out>/trace.jsonl and <out>/store/.
RunResult run_scenario(const Scenario& s, const std::filesystem::path& out_dir);

/// The same scenario with crash and restart events removed.
Scenario strip_faults(const Scenario& s);
RunResult oracle_failure_free(const Scenario& s, const std::filesystem::path& out_dir);

/// Restarts the scenario's processes from committed `epoch` of `store_dir`
/// (copied into <out>/store) and runs the computation to completion.
RunResult replay_epoch(const Scenario& s, const std::filesystem::path& store_dir, std::uint64_t epoch,
                       const std::filesystem::path& out_dir);

/// verify_run plus the app's output check, plus output equivalence against
/// the failure-free oracle (run into `oracle_dir`) when the scenario has faults.
std::vector<CheckReport> evaluate_run(const Scenario& s, const RunResult& run,
                                      const std::filesystem::path& oracle_dir);

}  // namespace ccncheck
