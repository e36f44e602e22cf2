#include "ccncheck/harness.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

#include "ccncheck/analysis.hpp"
#include "ccncheck/errors.hpp"

namespace ccncheck {
namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kActions = {"checkpoint", "crash", "restart_all", "restart"};

template <typename T>
void read_opt(const Json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

Topology topology_from(const Json& j, const Scenario& s, const fs::path& base) {
  if (j.contains("file")) {
    fs::path p = j.at("file").get<std::string>();
    return Topology::load(p.is_absolute() ? p : base / p);
  }
  if (j.contains("star")) {
    const auto& st = j.at("star");
    std::vector<NodeId> hosts = s.processes;
    hosts.push_back(s.coordinator);
    read_opt(st, "hosts", hosts);
    Tick lo = 1, hi = 3;
    read_opt(st, "min_latency", lo);
    read_opt(st, "max_latency", hi);
    std::uint64_t seed = s.seed;
    read_opt(st, "seed", seed);
    return Topology::star(hosts, seed, lo, hi);
  }
  return Topology::from_json(j);
}

std::vector<NodeId> star_hosts(const std::vector<NodeId>& processes, const NodeId& coordinator) {
  auto hosts = processes;
  hosts.push_back(coordinator);
  return hosts;
}

}  // namespace

void Scenario::validate() const {
  if (app != "fibonacci" && app != "counter") throw ScenarioError("unknown app '" + app + "'");
  if (processes.empty()) throw ScenarioError("no processes");
  if (app == "fibonacci" && steps < 2) throw ScenarioError("fibonacci needs steps >= 2");
  auto on_host = [&](const NodeId& n) {
    return std::find(topology.nodes.begin(), topology.nodes.end(), n) != topology.nodes.end();
  };
  for (const auto& p : processes) {
    if (!on_host(p)) throw ScenarioError("process " + p + " is not a host in the topology");
    if (std::count(processes.begin(), processes.end(), p) != 1) throw ScenarioError("duplicate process " + p);
  }
  if (!on_host(coordinator)) throw ScenarioError("coordinator " + coordinator + " is not a host");
  if (std::find(processes.begin(), processes.end(), coordinator) != processes.end())
    throw ScenarioError("coordinator must not be a process");
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    if (std::find(kActions.begin(), kActions.end(), e.action) == kActions.end())
      throw ScenarioError("unknown action '" + e.action + "'");
    if (i > 0 && e.at <= events[i - 1].at) throw ScenarioError("event times must be strictly increasing");
    if (e.action == "crash" && e.target != "all" && !topology.contains(e.target))
      throw ScenarioError("crash target " + e.target + " is not in the topology");
    if (e.action == "restart") {
      bool router = std::find(topology.routers.begin(), topology.routers.end(), e.target) != topology.routers.end();
      if (!router && e.target != coordinator)
        throw ScenarioError("restart targets a router or the coordinator; use restart_all for processes");
    }
  }
}

Scenario scenario_from_json(const Json& j, const fs::path& base) {
  Scenario s;
  read_opt(j, "name", s.name);
  read_opt(j, "seed", s.seed);
  read_opt(j, "app", s.app);
  read_opt(j, "steps", s.steps);
  read_opt(j, "coordinator", s.coordinator);
  read_opt(j, "processes", s.processes);
  if (s.processes.empty()) {
    std::size_t n = 3;
    if (j.contains("instances")) n = j.at("instances").get<std::size_t>();
    for (std::size_t i = 0; i < n; ++i) s.processes.push_back("p" + std::to_string(i));
  }
  try {
    if (j.contains("topology")) {
      s.topology = topology_from(j.at("topology"), s, base);
    } else {
      s.topology = Topology::star(star_hosts(s.processes, s.coordinator), s.seed);
    }
  } catch (const ScenarioError&) {
    throw;
  } catch (const Error& e) {
    throw ScenarioError(e.what());
  }
  if (j.contains("events")) {
    for (const auto& e : j.at("events")) {
      ScenarioEvent ev;
      ev.at = e.at("at").get<Tick>();
      ev.action = e.at("action").get<std::string>();
      read_opt(e, "target", ev.target);
      read_opt(e, "stagger", ev.stagger);
      s.events.push_back(ev);
    }
  }
  if (j.contains("config")) {
    const auto& c = j.at("config");
    auto& cfg = s.config;
    read_opt(c, "tick_interval", cfg.tick_interval);
    read_opt(c, "start_jitter", cfg.start_jitter);
    read_opt(c, "interest_lifetime", cfg.fabric.interest_lifetime);
    read_opt(c, "max_events", cfg.fabric.max_events);
    read_opt(c, "abort_window", cfg.checkpoint.abort_window);
    read_opt(c, "retry_delay", cfg.checkpoint.retry_delay);
    read_opt(c, "max_retries", cfg.checkpoint.max_retries);
    read_opt(c, "local_abort_window", cfg.checkpoint.local_abort_window);
    read_opt(c, "discover_timeout", cfg.recovery.discover_timeout);
    read_opt(c, "discover_attempts", cfg.recovery.discover_attempts);
    read_opt(c, "discover_retry_period", cfg.recovery.discover_retry_period);
    read_opt(c, "discover_max_waits", cfg.recovery.discover_max_waits);
  }
  s.validate();
  return s;
}

Scenario load_scenario(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw ScenarioError("cannot read " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  Json j;
  try {
    j = Json::parse(ss.str());
  } catch (const Json::exception& e) {
    throw ScenarioError(file.string() + ": " + e.what());
  }
  return scenario_from_json(j, file.parent_path());
}

Json to_json(const Scenario& s) {
  Json j = Json::object();
  j["name"] = s.name;
  j["seed"] = s.seed;
  j["app"] = s.app;
  j["steps"] = s.steps;
  j["processes"] = s.processes;
  j["coordinator"] = s.coordinator;
  j["topology"] = s.topology.to_json();
  Json events = Json::array();
  for (const auto& e : s.events) {
    Json ev = {{"at", e.at}, {"action", e.action}};
    if (!e.target.empty()) ev["target"] = e.target;
    if (e.stagger) ev["stagger"] = e.stagger;
    events.push_back(ev);
  }
  j["events"] = events;
  const auto& c = s.config;
  j["config"] = {{"tick_interval", c.tick_interval},
                 {"start_jitter", c.start_jitter},
                 {"interest_lifetime", c.fabric.interest_lifetime},
                 {"max_events", c.fabric.max_events},
                 {"abort_window", c.checkpoint.abort_window},
                 {"retry_delay", c.checkpoint.retry_delay},
                 {"max_retries", c.checkpoint.max_retries},
                 {"local_abort_window", c.checkpoint.local_abort_window},
                 {"discover_timeout", c.recovery.discover_timeout},
                 {"discover_attempts", c.recovery.discover_attempts},
                 {"discover_retry_period", c.recovery.discover_retry_period},
                 {"discover_max_waits", c.recovery.discover_max_waits}};
  return j;
}

Scenario fibonacci_scenario(std::uint64_t seed, std::size_t ring, std::uint64_t steps) {
  Scenario s;
  s.name = "fibonacci-" + std::to_string(seed);
  s.seed = seed;
  s.app = "fibonacci";
  s.steps = steps;
  for (std::size_t i = 0; i < ring; ++i) s.processes.push_back("p" + std::to_string(i));
  s.topology = Topology::star(star_hosts(s.processes, s.coordinator), seed);
  return s;
}

Scenario counter_scenario(std::uint64_t seed, std::size_t instances, std::uint64_t steps) {
  Scenario s = fibonacci_scenario(seed, instances, steps);
  s.name = "counter-" + std::to_string(seed);
  s.app = "counter";
  return s;
}

Scenario strip_faults(const Scenario& s) {
  Scenario out = s;
  std::erase_if(out.events, [](const ScenarioEvent& e) { return e.action != "checkpoint"; });
  return out;
}

// ------------------------------------------------------------------ runner

namespace {

/// Fabric plus every agent of one scenario.
class Deployment {
 public:
  Deployment(const Scenario& s, const fs::path& store_dir)
      : s_(s), fabric_(s.topology, s.config.fabric), store_(store_dir),
        coord_(s.ns(), s.coordinator, static_cast<std::uint32_t>(s.processes.size()), store_, s.config.checkpoint) {
    ProcessConfig pc{s.ns(), s.coordinator, s.config.checkpoint, s.config.recovery};
    for (std::size_t i = 0; i < s.processes.size(); ++i) {
      const NodeId& p = s.processes[i];
      ProcessNode::AppFactory factory;
      if (s.app == "fibonacci") {
        factory = [ring = s.processes, p, n = s.steps] { return std::make_unique<FibonacciApp>(ring, p, n); };
      } else {
        factory = [n = s.steps, t = s.config.tick_interval] { return std::make_unique<CounterApp>(n, t); };
      }
      procs_.push_back(std::make_unique<ProcessNode>(p, static_cast<std::uint32_t>(i), factory, store_, pc));
      by_name_[p] = procs_.back().get();
      fabric_.attach(p, procs_.back().get());
    }
    fabric_.attach(s.coordinator, &coord_);
  }

  Fabric& fabric() { return fabric_; }

  void boot() {
    std::mt19937_64 rng(s_.seed);
    for (const auto& p : s_.processes) {
      Tick delay = 1;
      if (s_.app == "counter") delay = 1 + rng() % std::max<Tick>(s_.config.start_jitter, 1);
      auto ctx = fabric_.context(p);
      by_name_.at(p)->boot(ctx, delay);
    }
    boot_coordinator();
  }

  void boot_coordinator() {
    auto ctx = fabric_.context(s_.coordinator);
    coord_.boot(ctx);
    for (const auto& p : s_.processes) {
      if (fabric_.alive(p) && fabric_.prefix_owner(node_prefix(s_.ns(), p)) == p) coord_.register_process(fabric_, p);
    }
  }

  /// Restarts every process from `epoch` (0: from scratch), `stagger` apart.
  void recover_all(std::uint64_t epoch, Tick stagger) {
    for (std::size_t i = 0; i < s_.processes.size(); ++i) {
      auto bring_up = [this, p = s_.processes[i], epoch] {
        fabric_.crash_node(p);  // halt any survivor: restarts are global
        fabric_.restart_node(p);
        auto ctx = fabric_.context(p);
        std::optional<LocalSnapshot> snap;
        if (epoch) snap = store_.read_snapshot(epoch, p);
        by_name_.at(p)->recover(ctx, snap, epoch);
      };
      if (i == 0 || stagger == 0) {
        bring_up();
      } else {
        fabric_.schedule(fabric_.now() + i * stagger, bring_up);
      }
    }
  }

  void schedule(const ScenarioEvent& ev) {
    std::function<void()> action;
    if (ev.action == "checkpoint") {
      action = [this] {
        auto ctx = fabric_.context(s_.coordinator);
        if (!fabric_.alive(s_.coordinator)) {
          ctx.log("checkpoint_rejected", Json{{"reason", "node_down"}});
          return;
        }
        try {
          coord_.initiate_checkpoint(ctx);
        } catch (const CheckpointInProgress&) {
          ctx.log("checkpoint_rejected", Json{{"reason", "in_progress"}});
        }
      };
    } else if (ev.action == "crash") {
      action = [this, target = ev.target] {
        if (target != "all") {
          fabric_.crash_node(target);
          return;
        }
        for (const auto& n : s_.topology.nodes) fabric_.crash_node(n);
        for (const auto& r : s_.topology.routers) fabric_.crash_node(r);
      };
    } else if (ev.action == "restart") {
      action = [this, target = ev.target] {
        if (fabric_.alive(target)) return;
        fabric_.restart_node(target);
        if (target == s_.coordinator) boot_coordinator();
      };
    } else {
      action = [this, stagger = ev.stagger] {
        for (const auto& r : s_.topology.routers)
          if (!fabric_.alive(r)) fabric_.restart_node(r);
        for (const auto& n : s_.topology.nodes) {
          if (!fabric_.alive(n) && !by_name_.contains(n) && n != s_.coordinator) fabric_.restart_node(n);
        }
        if (!fabric_.alive(s_.coordinator)) {
          fabric_.restart_node(s_.coordinator);
          boot_coordinator();
        }
        std::uint64_t epoch = 0;
        try {
          epoch = plan_restart(store_).epoch;
        } catch (const NoCheckpoint&) {
        }
        recover_all(epoch, stagger);
      };
    }
    fabric_.schedule(ev.at, std::move(action));
  }

 private:
  const Scenario& s_;
  Fabric fabric_;
  SnapshotStore store_;
  Coordinator coord_;
  std::vector<std::unique_ptr<ProcessNode>> procs_;
  std::map<NodeId, ProcessNode*> by_name_;
};

RunResult prepare(const fs::path& out_dir) {
  RunResult result;
  result.out_dir = out_dir;
  result.store_dir = out_dir / "store";
  result.trace_file = out_dir / "trace.jsonl";
  fs::create_directories(out_dir);
  fs::remove_all(result.store_dir);
  fs::create_directories(result.store_dir);
  return result;
}

void finish(Deployment& d, RunResult& result) {
  d.fabric().run_until_quiescent();
  d.fabric().trace().write_jsonl(result.trace_file);
  result.trace = d.fabric().trace();
}

}  // namespace

RunResult run_scenario(const Scenario& s, const fs::path& out_dir) {
  s.validate();
  RunResult result = prepare(out_dir);
  Deployment d(s, result.store_dir);
  d.boot();
  for (const auto& ev : s.events) d.schedule(ev);
  finish(d, result);
  return result;
}

RunResult replay_epoch(const Scenario& s, const fs::path& store_dir, std::uint64_t epoch, const fs::path& out_dir) {
  s.validate();
  SnapshotStore source(store_dir);
  auto plan = plan_restart(source, epoch);
  RunResult result = prepare(out_dir);
  for (auto e : source.epochs()) {
    if (e > plan.epoch) continue;
    fs::copy(store_dir / std::to_string(e), result.store_dir / std::to_string(e), fs::copy_options::recursive);
  }
  Deployment d(s, result.store_dir);
  d.boot_coordinator();
  d.recover_all(plan.epoch, 0);
  finish(d, result);
  return result;
}

RunResult oracle_failure_free(const Scenario& s, const fs::path& out_dir) {
  return run_scenario(strip_faults(s), out_dir);
}

}  // namespace ccncheck

namespace ccncheck {

std::vector<CheckReport> evaluate_run(const Scenario& s, const RunResult& run, const fs::path& oracle_dir) {
  auto reports = verify_run(run.trace, SnapshotStore(run.store_dir));
  bool faulty = strip_faults(s).events.size() != s.events.size();
  if (s.app == "fibonacci") {
    reports.push_back(check_fibonacci(run.trace, s.steps));
  } else {
    reports.push_back(check_counter(run.trace, s.steps));
  }
  if (faulty) {
    auto oracle = oracle_failure_free(s, oracle_dir);
    auto eq = check_output_equivalence(oracle.trace, run.trace);
    CheckReport r{"output_equivalence", 1, {}};
    if (!eq.equal) r.violations.push_back(eq.first_divergence.value_or("unequal"));
    reports.push_back(r);
  }
  return reports;
}

}  // namespace ccncheck
