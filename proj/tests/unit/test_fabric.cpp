#include <gtest/gtest.h>

#include <functional>
#include <random>

#include "ccncheck/errors.hpp"
#include "ccncheck/fabric.hpp"

namespace ccncheck {
namespace {

// Records everything it sees; optionally answers interests immediately.
struct Recorder : NodeAgent {
  std::vector<std::pair<Tick, Interest>> interests;
  std::vector<std::pair<Tick, Data>> data;
  std::vector<Interest> timeouts;
  std::vector<std::uint64_t> timers;
  bool auto_answer = false;
  int crashes = 0;

  void on_interest(NodeContext& ctx, const Interest& i) override {
    interests.emplace_back(ctx.now(), i);
    if (auto_answer) ctx.satisfy(i, Bytes{'o', 'k'});
  }
  void on_data(NodeContext& ctx, const Data& d) override { data.emplace_back(ctx.now(), d); }
  void on_timeout(NodeContext&, const Interest& i) override { timeouts.push_back(i); }
  void on_timer(NodeContext&, std::uint64_t tag) override { timers.push_back(tag); }
  void on_crash() override {
    interests.clear();
    ++crashes;
  }
};

const auto kRts = StructuredName::rts("fib", "nodeB", "nodeA");

struct LineFixture : ::testing::Test {
  Fabric fabric{Topology::line({"nodeA", "R", "nodeB"})};
  Recorder a, b;
  void SetUp() override {
    fabric.attach("nodeA", &a);
    fabric.attach("nodeB", &b);
    fabric.register_prefix("nodeB", "/fib/nodeB");
  }
};

TEST_F(LineFixture, InterestDeliveredAfterSumOfLatencies) {
  auto nonce = fabric.express_interest("nodeA", kRts);
  fabric.run_until(1);
  ASSERT_TRUE(b.interests.empty());
  ASSERT_EQ(fabric.pit("R").size(), 1u);
  EXPECT_EQ(fabric.pit("R")[0].interest.nonce, nonce);
  fabric.run_until(2);
  ASSERT_EQ(b.interests.size(), 1u);
  EXPECT_EQ(b.interests[0].first, 2u);
  EXPECT_EQ(b.interests[0].second.name, kRts);
  EXPECT_EQ(fabric.handle_status("nodeA", nonce), HandleState::Pending);
}

TEST_F(LineFixture, DataRetracesPathAndConsumesPit) {
  auto nonce = fabric.express_interest("nodeA", kRts);
  fabric.run_until(2);
  fabric.satisfy_interest("nodeB", kRts, Bytes{});
  fabric.run_until(4);
  ASSERT_EQ(a.data.size(), 1u);
  EXPECT_EQ(a.data[0].first, 4u);
  EXPECT_EQ(a.data[0].second.origin, "nodeB");
  EXPECT_TRUE(fabric.pit("R").empty());
  EXPECT_TRUE(fabric.pit("nodeA").empty());
  EXPECT_EQ(fabric.handle_status("nodeA", nonce), HandleState::Satisfied);
}

TEST_F(LineFixture, UnroutedInterestExpiresAfterLifetime) {
  auto nonce = fabric.express_interest("nodeA", StructuredName::rts("fib", "nodeZ", "nodeA"));
  fabric.run_until(fabric.config().interest_lifetime - 1);
  EXPECT_EQ(fabric.handle_status("nodeA", nonce), HandleState::Pending);
  fabric.run_until(fabric.config().interest_lifetime);
  EXPECT_EQ(fabric.handle_status("nodeA", nonce), HandleState::Expired);
  ASSERT_EQ(a.timeouts.size(), 1u);
}

TEST_F(LineFixture, SameNameTwiceIsNotCollapsed) {
  auto n1 = fabric.express_interest("nodeA", kRts);
  auto n2 = fabric.express_interest("nodeA", kRts);
  EXPECT_NE(n1, n2);
  fabric.run_until(2);
  EXPECT_EQ(b.interests.size(), 2u);
  EXPECT_EQ(fabric.pit("R").size(), 2u);
}

TEST_F(LineFixture, PrefixRegistrationRules) {
  EXPECT_NO_THROW(fabric.register_prefix("nodeB", "/fib/nodeB"));
  EXPECT_THROW(fabric.register_prefix("nodeA", "/fib/nodeB"), PrefixConflict);
  fabric.crash_node("nodeA");
  EXPECT_THROW(fabric.register_prefix("nodeA", "/fib/nodeA"), NodeDown);
}

TEST_F(LineFixture, SatisfyNeverReceivedIsProtocolViolation) {
  EXPECT_THROW(fabric.satisfy_interest("nodeB", kRts, Bytes{}), ProtocolViolation);
}

TEST_F(LineFixture, CrashBeforeDataArrivalDropsData) {
  fabric.express_interest("nodeA", kRts);
  fabric.run_until(2);
  fabric.satisfy_interest("nodeB", kRts, Bytes{});
  fabric.run_until(3);
  fabric.crash_node("nodeA");
  fabric.run_until_quiescent();
  EXPECT_TRUE(a.data.empty());
  EXPECT_EQ(fabric.data_drops(), 1u);
}

TEST_F(LineFixture, RebuiltRouterDropsDataWithoutPit) {
  fabric.express_interest("nodeA", kRts);
  fabric.run_until(2);
  fabric.crash_node("R");
  fabric.restart_node("R");
  fabric.satisfy_interest("nodeB", kRts, Bytes{});
  fabric.run_until_quiescent();
  EXPECT_TRUE(a.data.empty());
  EXPECT_EQ(fabric.data_drops(), 1u);
  const auto& last = *std::find_if(fabric.trace().events().rbegin(), fabric.trace().events().rend(),
                                   [](const auto& e) { return e.ev == "data_dropped"; });
  EXPECT_EQ(last.node, "R");
  EXPECT_EQ(last.str("reason"), "no_pit");
}

TEST_F(LineFixture, CrashedNodeExpiresIncomingAndRestartsEmpty) {
  fabric.crash_node("nodeB");
  auto nonce = fabric.express_interest("nodeA", kRts);
  fabric.run_until_quiescent();
  EXPECT_EQ(fabric.handle_status("nodeA", nonce), HandleState::Expired);
  EXPECT_TRUE(b.interests.empty());

  fabric.restart_node("nodeB");
  EXPECT_TRUE(fabric.alive("nodeB"));
  EXPECT_TRUE(fabric.pit("nodeB").empty());
  EXPECT_FALSE(fabric.prefix_owner("/fib/nodeB"));  // registrations do not auto-restore
  fabric.register_prefix("nodeB", "/fib/nodeB");
  fabric.express_interest("nodeA", kRts);
  fabric.run_until_quiescent();
  EXPECT_EQ(b.interests.size(), 1u);
}

TEST_F(LineFixture, CrashIsIdempotentAndSilencesNode) {
  fabric.set_timer("nodeB", 5, 42);
  fabric.crash_node("nodeB");
  fabric.crash_node("nodeB");
  EXPECT_EQ(b.crashes, 1);
  fabric.express_interest("nodeA", kRts);
  fabric.run_until_quiescent();
  EXPECT_TRUE(b.timers.empty());
  bool down = false;
  for (const auto& e : fabric.trace().events()) {
    if (e.ev == "crash" && e.node == "nodeB") down = true;
    if (e.ev == "restart" && e.node == "nodeB") down = false;
    if (down && e.node == "nodeB" && e.ev != "crash") EXPECT_TRUE(e.ev.ends_with("_dropped")) << e.ev;
  }
}

TEST_F(LineFixture, PitSoundness) {
  b.auto_answer = true;
  for (int i = 0; i < 5; ++i) fabric.express_interest("nodeA", kRts);
  fabric.run_until_quiescent();
  std::size_t consumed_at_r = 0;
  for (const auto& e : fabric.trace().events()) {
    if (e.ev == "pit_consume" && e.node == "R") ++consumed_at_r;
  }
  EXPECT_EQ(a.data.size(), 5u);
  EXPECT_EQ(consumed_at_r, 5u);
}

// Oracle: shortest delivery time by enumerating every simple path.
Tick brute_force_latency(const Topology& t, const NodeId& from, const NodeId& to) {
  Tick best = std::numeric_limits<Tick>::max();
  std::set<NodeId> visited{from};
  std::function<void(const NodeId&, Tick)> walk = [&](const NodeId& at, Tick acc) {
    if (at == to) {
      best = std::min(best, acc);
      return;
    }
    for (const auto& l : t.links) {
      NodeId next;
      if (l.a == at) next = l.b;
      else if (l.b == at) next = l.a;
      else continue;
      if (visited.contains(next)) continue;
      visited.insert(next);
      walk(next, acc + l.latency);
      visited.erase(next);
    }
  };
  walk(from, 0);
  return best;
}

TEST(Fabric, DeliveryTimeMatchesBruteForceShortestPath) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    Topology t;
    t.nodes = {"h0", "h1", "h2", "h3"};
    t.routers = {"r0", "r1", "r2"};
    std::vector<NodeId> all = {"h0", "h1", "h2", "h3", "r0", "r1", "r2"};
    // spanning chain guarantees connectivity, extra random links add choice
    for (std::size_t i = 1; i < all.size(); ++i)
      t.links.push_back({all[rng() % i], all[i], 1 + rng() % 5});
    for (int k = 0; k < 4; ++k) {
      auto a = all[rng() % all.size()];
      auto b = all[rng() % all.size()];
      bool dup = a == b;
      for (const auto& l : t.links) dup |= (l.a == a && l.b == b) || (l.a == b && l.b == a);
      if (!dup) t.links.push_back({a, b, 1 + rng() % 5});
    }
    Fabric fabric(t);
    Recorder dst;
    fabric.attach("h3", &dst);
    fabric.register_prefix("h3", "/app/h3");
    fabric.express_interest("h0", StructuredName::rts("app", "h3", "h0"));
    fabric.run_until_quiescent();
    ASSERT_EQ(dst.interests.size(), 1u);
    EXPECT_EQ(dst.interests[0].first, brute_force_latency(t, "h0", "h3")) << "trial " << trial;
  }
}

TEST(Fabric, IdenticalScriptsGiveIdenticalTraces) {
  auto run = [] {
    Fabric fabric(Topology::star({"a", "b", "c"}, 77));
    Recorder b;
    b.auto_answer = true;
    fabric.attach("b", &b);
    fabric.register_prefix("b", "/x/b");
    for (int i = 0; i < 3; ++i) {
      fabric.schedule(static_cast<Tick>(i * 3), [&fabric] {
        fabric.express_interest("a", StructuredName::rts("x", "b", "a"));
        fabric.express_interest("c", StructuredName::rts("x", "b", "c"));
      });
    }
    fabric.run_until_quiescent();
    return fabric.trace().to_jsonl();
  };
  EXPECT_EQ(run(), run());
}

TEST(Fabric, TraceLinesAreOrderedAndParseBack) {
  Fabric fabric(Topology::line({"nodeA", "R", "nodeB"}));
  fabric.register_prefix("nodeB", "/fib/nodeB");
  fabric.express_interest("nodeA", kRts);
  fabric.run_until_quiescent();
  auto text = fabric.trace().to_jsonl();
  EXPECT_TRUE(text.starts_with("{\"t\":0,\"seq\":0,\"ev\":\"fib_add\""));
  auto back = Trace::from_jsonl(text);
  EXPECT_EQ(back.to_jsonl(), text);
}

}  // namespace
}  // namespace ccncheck
