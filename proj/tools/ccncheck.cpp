// ccncheck: run, verify, replay and sweep checkpointing scenarios.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>

#include "ccncheck/errors.hpp"
#include "ccncheck/harness.hpp"

namespace fs = std::filesystem;
using namespace ccncheck;

namespace {

bool print_reports(const std::vector<CheckReport>& reports) {
  bool ok = true;
  for (const auto& r : reports) {
    std::cout << (r.ok() ? "  ok    " : "  FAIL  ") << r.property << " (" << r.checked << " checked";
    if (!r.ok()) std::cout << ", " << r.violations.size() << " violations";
    std::cout << ")\n";
    for (std::size_t i = 0; i < r.violations.size() && i < 10; ++i) std::cout << "        " << r.violations[i] << "\n";
    ok = ok && r.ok();
  }
  return ok;
}

std::size_t count_events(const Trace& t, std::string_view ev) {
  return static_cast<std::size_t>(
      std::count_if(t.events().begin(), t.events().end(), [&](const TraceEvent& e) { return e.ev == ev; }));
}

int cmd_run(const fs::path& scenario_file, const fs::path& out) {
  auto s = load_scenario(scenario_file);
  auto run = run_scenario(s, out);
  std::cout << "scenario " << s.name << " (" << s.app << ", seed " << s.seed << ")\n"
            << "  events " << run.trace.events().size() << ", final tick "
            << (run.trace.events().empty() ? 0 : run.trace.events().back().t) << ", commits "
            << count_events(run.trace, "commit") << ", aborts " << count_events(run.trace, "abort") << "\n"
            << "  trace " << run.trace_file.string() << "\n"
            << "  store " << run.store_dir.string() << "\n";
  bool ok = print_reports(evaluate_run(s, run, out / "oracle"));
  std::cout << (ok ? "PASS" : "FAIL") << "\n";
  return ok ? 0 : 1;
}

int cmd_verify(const fs::path& trace_file, const fs::path& store_dir) {
  auto trace = Trace::read_jsonl(trace_file);
  SnapshotStore store(store_dir);
  std::cout << "trace " << trace_file.string() << ": " << trace.events().size() << " events\n";
  for (const auto& rep : verify_store(store, trace)) {
    std::cout << "  epoch " << rep.epoch << ": orphan messages " << rep.orphan_messages + rep.trace_orphan_messages
              << ", orphan interests " << rep.orphan_interests + rep.trace_orphan_interests
              << ", in flight at snapshot " << rep.in_flight_at_snapshot << "\n";
  }
  bool ok = print_reports(verify_run(trace, store));
  std::cout << (ok ? "PASS" : "FAIL") << "\n";
  return ok ? 0 : 1;
}

int cmd_replay(const fs::path& store_dir, std::uint64_t epoch, const std::string& scenario_file, const fs::path& out) {
  SnapshotStore store(store_dir);
  auto plan = plan_restart(store, epoch);
  std::cout << "epoch " << plan.epoch << " (committed)\n";
  for (const auto& p : plan.processes) {
    auto snap = store.read_snapshot(plan.epoch, p);
    std::cout << "  " << p << ": app_step " << snap->app_step << ", state " << to_string(snap->app_state)
              << ", pending " << plan.pending_to_reissue[p].size() << "\n";
    for (const auto& n : plan.pending_to_reissue[p]) std::cout << "    reissue " << format_name(n) << "\n";
  }
  if (scenario_file.empty()) return 0;
  auto s = load_scenario(scenario_file);
  auto run = replay_epoch(s, store_dir, plan.epoch, out);
  std::cout << "resumed run: " << run.trace.events().size() << " events, trace " << run.trace_file.string() << "\n";
  auto reports = verify_run(run.trace, SnapshotStore(run.store_dir));
  // every step up to the furthest snapshot was output before the checkpoint
  std::uint64_t resume_from = 0;
  for (const auto& p : plan.processes) resume_from = std::max(resume_from, store.read_snapshot(plan.epoch, p)->app_step);
  if (s.app == "fibonacci") reports.push_back(check_fibonacci(run.trace, s.steps, resume_from + 1));
  if (s.app == "counter") reports.push_back(check_counter(run.trace, s.steps));
  bool ok = print_reports(reports);
  std::cout << (ok ? "PASS" : "FAIL") << "\n";
  return ok ? 0 : 1;
}

int cmd_sweep(std::uint64_t seeds, const fs::path& scenario_file, const fs::path& out) {
  std::ifstream in(scenario_file);
  if (!in) throw ScenarioError("cannot read " + scenario_file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  auto base = Json::parse(ss.str());
  std::size_t failed = 0;
  for (std::uint64_t seed = 0; seed < seeds; ++seed) {
    auto j = base;
    j["seed"] = seed;
    auto s = scenario_from_json(j, scenario_file.parent_path());
    auto dir = out / ("seed-" + std::to_string(seed));
    auto run = run_scenario(s, dir);
    auto reports = evaluate_run(s, run, dir / "oracle");
    bool ok = std::all_of(reports.begin(), reports.end(), [](const CheckReport& r) { return r.ok(); });
    std::cout << "seed " << seed << ": " << (ok ? "ok" : "FAIL") << "\n";
    if (!ok) {
      ++failed;
      print_reports(reports);
    }
  }
  std::cout << seeds - failed << "/" << seeds << " seeds passed\n" << (failed ? "FAIL" : "PASS") << "\n";
  return failed ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Checkpoint/restart simulator for distributed apps over a content-centric network"};
  app.require_subcommand(1);

  fs::path scenario, out = "ccncheck-out", trace, store;
  std::uint64_t epoch = 0, seeds = 10;
  std::string replay_scenario;

  auto* run = app.add_subcommand("run", "Run a scenario and check every property");
  run->add_option("scenario", scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out, "Output directory for trace.jsonl and store/")->required();

  auto* verify = app.add_subcommand("verify", "Check a recorded trace against its snapshot store");
  verify->add_option("--trace", trace, "trace.jsonl")->required()->check(CLI::ExistingFile);
  verify->add_option("--store", store, "Snapshot store directory")->required()->check(CLI::ExistingDirectory);

  auto* replay = app.add_subcommand("replay", "Show the restart plan for an epoch, optionally resume from it");
  replay->add_option("--store", store, "Snapshot store directory")->required()->check(CLI::ExistingDirectory);
  replay->add_option("--epoch", epoch, "Committed epoch")->required();
  replay->add_option("--scenario", replay_scenario, "Scenario to resume from the epoch")->check(CLI::ExistingFile);
  replay->add_option("--out", out, "Output directory for the resumed run");

  auto* sweep = app.add_subcommand("sweep", "Run a scenario over seeds 0..N-1");
  sweep->add_option("--seeds", seeds, "Number of seeds")->required();
  sweep->add_option("--scenario", scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
  sweep->add_option("--out", out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // --help exits 0, any other parse error is a usage error
    return app.exit(e) == 0 ? 0 : 2;
  }
  try {
    if (*run) return cmd_run(scenario, out);
    if (*verify) return cmd_verify(trace, store);
    if (*replay) return cmd_replay(store, epoch, replay_scenario, out);
    if (*sweep) return cmd_sweep(seeds, scenario, out);
  } catch (const std::exception& e) {
    std::cerr << "ccncheck: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
