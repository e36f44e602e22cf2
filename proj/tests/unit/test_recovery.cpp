#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "ccncheck/errors.hpp"
#include "ccncheck/harness.hpp"
#include "ccncheck/recovery.hpp"
#include "scratch.hpp"

namespace ccncheck {
namespace {

using testing::scratch_dir;

std::size_t count(const Trace& t, std::string_view ev) {
  std::size_t n = 0;
  for (const auto& e : t.events()) n += e.ev == ev;
  return n;
}

void expect_all_ok(const std::vector<CheckReport>& reports) {
  for (const auto& r : reports) {
    EXPECT_TRUE(r.ok()) << r.property;
    for (const auto& v : r.violations) ADD_FAILURE() << r.property << ": " << v;
  }
}

TEST(PlanRestart, PicksLatestCommittedEpoch) {
  SnapshotStore store(scratch_dir());
  EXPECT_THROW(plan_restart(store), NoCheckpoint);
  for (std::uint64_t e : {1, 2}) {
    store.create_epoch(e);
    LocalSnapshot s;
    s.process = "p0";
    s.epoch = e;
    if (e == 1) s.unanswered_interests.push_back(parse_name("ccnx://fib/p1/CTS/p0"));
    store.write_snapshot(s);
  }
  store.write_manifest({1, {"p0"}, true});

  auto plan = plan_restart(store);
  EXPECT_EQ(plan.epoch, 1u);
  EXPECT_EQ(plan.processes, std::vector<NodeId>{"p0"});
  ASSERT_EQ(plan.pending_to_reissue["p0"].size(), 1u);
  EXPECT_EQ(format_name(plan.pending_to_reissue["p0"][0]), "ccnx://fib/p1/CTS/p0");

  EXPECT_EQ(plan_restart(store, 1).epoch, 1u);
  EXPECT_THROW(plan_restart(store, 2), NoCheckpoint);
  EXPECT_THROW(plan_restart(store, 7), NoCheckpoint);
}

Scenario crash_scenario(std::uint64_t seed, Tick stagger) {
  auto s = fibonacci_scenario(seed);
  s.events = {{40, "checkpoint", "", 0}, {150, "crash", "all", 0}, {160, "restart_all", "", stagger}};
  return s;
}

TEST(Recovery, StaggeredRestartDiscoversPeersAndFinishes) {
  auto s = crash_scenario(7, 5);
  auto dir = scratch_dir();
  auto run = run_scenario(s, dir);
  EXPECT_EQ(count(run.trace, "restore"), 3u);
  EXPECT_EQ(count(run.trace, "recovery_complete"), 3u);
  EXPECT_EQ(count(run.trace, "discover_gave_up"), 0u);
  expect_all_ok(evaluate_run(s, run, dir / "oracle"));
}

TEST(Recovery, LateRestartWaitsForPeers) {
  // stagger longer than the doubling DISCOVER rounds
  auto s = crash_scenario(7, 200);
  auto dir = scratch_dir();
  auto run = run_scenario(s, dir);
  EXPECT_GT(count(run.trace, "discover_wait"), 0u);
  EXPECT_EQ(count(run.trace, "discover_gave_up"), 0u);
  EXPECT_EQ(count(run.trace, "recovery_complete"), 3u);
  expect_all_ok(evaluate_run(s, run, dir / "oracle"));
}

TEST(Recovery, NothingCommittedRestartsFromScratch) {
  auto s = fibonacci_scenario(4);
  s.events = {{20, "crash", "all", 0}, {30, "restart_all", "", 0}};
  auto dir = scratch_dir();
  auto run = run_scenario(s, dir);
  for (const auto& e : run.trace.events())
    if (e.ev == "restore") EXPECT_EQ(e.num("epoch"), 0u);
  expect_all_ok(evaluate_run(s, run, dir / "oracle"));
}

TEST(Recovery, PeerCrashDuringFlushAbortsEpoch) {
  auto s = fibonacci_scenario(7);
  s.events = {{40, "checkpoint", "", 0}, {41, "crash", "p1", 0}, {600, "restart_all", "", 0}};
  auto dir = scratch_dir();
  auto run = run_scenario(s, dir);
  EXPECT_GT(count(run.trace, "abort"), 0u);
  // epoch 1 never commits; the retry after the restart does
  SnapshotStore store(run.store_dir);
  EXPECT_FALSE(store.load(1).committed);
  EXPECT_EQ(store.latest_committed(), 2u);
  expect_all_ok(evaluate_run(s, run, dir / "oracle"));
}

TEST(Recovery, ReplayFromStoreCompletesComputation) {
  auto s = fibonacci_scenario(2);
  s.events = {{40, "checkpoint", "", 0}};
  auto dir = scratch_dir();
  auto first = run_scenario(s, dir / "first");
  auto resumed = replay_epoch(s, first.store_dir, 1, dir / "resumed");
  EXPECT_EQ(count(resumed.trace, "restore"), 3u);
  // the resumed run emits only the steps after the snapshot, matching the original
  auto ref = project_outputs(first.trace);
  std::map<std::uint64_t, std::string> expected;
  for (const auto& [node, outs] : ref.outputs)
    for (const auto& o : outs) expected[o.step] = o.value;
  auto got = project_outputs(resumed.trace);
  EXPECT_TRUE(got.conflicts.empty());
  std::uint64_t last = 0;
  for (const auto& [node, outs] : got.outputs) {
    for (const auto& o : outs) {
      EXPECT_EQ(expected[o.step], o.value) << "step " << o.step;
      last = std::max(last, o.step);
    }
  }
  EXPECT_EQ(last, s.steps);
}

TEST(Recovery, RunsAreDeterministic) {
  auto s = crash_scenario(11, 5);
  auto dir = scratch_dir();
  auto a = run_scenario(s, dir / "a");
  auto b = run_scenario(s, dir / "b");
  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  EXPECT_FALSE(slurp(a.trace_file).empty());
  EXPECT_EQ(slurp(a.trace_file), slurp(b.trace_file));
}

}  // namespace
}  // namespace ccncheck
