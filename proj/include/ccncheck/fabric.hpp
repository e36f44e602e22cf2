#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "ccncheck/names.hpp"
#include "ccncheck/topology.hpp"
#include "ccncheck/trace.hpp"

namespace ccncheck {

using Nonce = std::uint64_t;
using Bytes = std::vector<std::uint8_t>;
using FaceId = std::uint32_t;

/// Face 0 on every endpoint is the local application face.
inline constexpr FaceId kAppFace = 0;

struct Interest {
  StructuredName name;
  Nonce nonce = 0;
  Tick issue_time = 0;
  Tick lifetime = 0;
};

/// Carries the nonce of the Interest it satisfies so that each hop consumes
/// exactly the breadcrumb that Interest left (interests are never aggregated).
struct Data {
  StructuredName name;
  Bytes payload;
  NodeId origin;
  Nonce nonce = 0;
};

struct FibEntry {
  std::string prefix;
  FaceId next_hop = kAppFace;
};

struct PitEntry {
  Interest interest;
  FaceId in_face = kAppFace;
  Tick created = 0;
};

enum class HandleState { Pending, Satisfied, Expired, Unknown };

struct FabricConfig {
  /// Default Interest lifetime; expired PIT entries are garbage-collected.
  Tick interest_lifetime = 100;
  /// run_until_quiescent gives up (throws) after this many events.
  std::uint64_t max_events = 20'000'000;
};

class Fabric;

/// The only view of the world a node's logic gets: its own identity, its own
/// clock reading, and packet/timer primitives scoped to itself.
class NodeContext {
 public:
  NodeContext(Fabric& fabric, std::size_t endpoint) : fabric_(&fabric), endpoint_(endpoint) {}

  const NodeId& self() const;
  Tick now() const;
  Nonce express(const StructuredName& name, std::optional<Tick> lifetime = std::nullopt);
  void satisfy(const Interest& received, Bytes payload);
  bool can_satisfy(Nonce received) const;
  void set_timer(Tick delay, std::uint64_t tag);
  void register_prefix(const std::string& prefix);
  void log(std::string ev, Json fields = Json::object());

 private:
  Fabric* fabric_;
  std::size_t endpoint_;
};

/// Process logic attached to a host. Callbacks run on the fabric's event
/// loop, one at a time, in event order.
class NodeAgent {
 public:
  virtual ~NodeAgent() = default;
  virtual void on_interest(NodeContext& ctx, const Interest& interest) = 0;
  virtual void on_data(NodeContext& ctx, const Data& data) = 0;
  virtual void on_timeout(NodeContext& ctx, const Interest& interest) = 0;
  virtual void on_timer(NodeContext& ctx, std::uint64_t tag) = 0;
  /// Fail-stop: discard all volatile state.
  virtual void on_crash() = 0;
};

/// Deterministic discrete-event CCN. Events are processed in (time, sequence)
/// order; the same topology and script always produce the same trace.
class Fabric {
 public:
  explicit Fabric(Topology topology, FabricConfig config = {});
  Fabric(const Fabric&) = delete;
  Fabric& operator=(const Fabric&) = delete;

  const Topology& topology() const noexcept { return topology_; }
  const FabricConfig& config() const noexcept { return config_; }
  Tick now() const noexcept { return now_; }
  Trace& trace() noexcept { return trace_; }
  const Trace& trace() const noexcept { return trace_; }

  /// Non-owning; the agent must outlive the fabric or be detached.
  void attach(const NodeId& node, NodeAgent* agent);
  NodeContext context(const NodeId& node);

  void register_prefix(const NodeId& node, const std::string& prefix);
  Nonce express_interest(const NodeId& node, const StructuredName& name,
                         std::optional<Tick> lifetime = std::nullopt);
  /// Answers the oldest unsatisfied received Interest carrying `name`.
  void satisfy_interest(const NodeId& node, const StructuredName& name, Bytes payload);
  /// Answers exactly the given received Interest.
  void satisfy_interest(const NodeId& node, const Interest& received, Bytes payload);
  bool has_received(const NodeId& node, Nonce nonce) const;
  HandleState handle_status(const NodeId& node, Nonce nonce) const;

  void crash_node(const NodeId& node);
  void restart_node(const NodeId& node);
  bool alive(const NodeId& node) const;

  void set_timer(const NodeId& node, Tick delay, std::uint64_t tag);
  /// Runs `action` on the event loop at tick `at` (harness/driver use).
  void schedule(Tick at, std::function<void()> action);

  std::span<const TraceEvent> run_until(Tick t);
  std::span<const TraceEvent> run_until_quiescent();
  bool idle() const noexcept { return queue_.empty(); }

  std::vector<PitEntry> pit(const NodeId& node) const;
  std::vector<FibEntry> fib(const NodeId& node) const;
  std::optional<NodeId> prefix_owner(const std::string& prefix) const;
  std::uint64_t data_drops() const noexcept { return data_drops_; }

 private:
  friend class NodeContext;

  struct Face {
    std::size_t neighbor;
    FaceId remote_face;
    Tick latency;
  };

  struct Endpoint {
    NodeId id;
    bool router = false;
    bool up = true;
    std::uint32_t incarnation = 0;
    std::uint32_t nonce_counter = 0;
    std::vector<Face> faces;  // faces[k] is FaceId k + 1
    std::map<std::string, FaceId> fib;
    std::map<Nonce, PitEntry> pit;
    std::deque<Interest> received;
    std::map<Nonce, HandleState> handles;
    NodeAgent* agent = nullptr;
  };

  struct Arrival {
    std::size_t to;
    FaceId face;
    std::uint32_t to_incarnation;
    std::variant<Interest, Data> packet;
  };
  struct Timer {
    std::size_t node;
    std::uint32_t incarnation;
    std::uint64_t tag;
  };
  struct Expiry {
    std::size_t at;
    std::uint32_t incarnation;
    Nonce nonce;
  };
  struct Driver {
    std::function<void()> action;
  };
  struct Event {
    Tick t;
    std::uint64_t seq;
    std::variant<Arrival, Timer, Expiry, Driver> body;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      return a.t != b.t ? a.t > b.t : a.seq > b.seq;
    }
  };

  std::size_t index_of(const NodeId& node) const;
  Endpoint& host(const NodeId& node);
  const Endpoint& host(const NodeId& node) const;
  void push(Tick t, decltype(Event::body) body);
  void step();
  void recompute_routes();
  std::optional<FaceId> lookup(const Endpoint& e, const std::string& uri) const;
  const NodeId& face_peer(const Endpoint& e, FaceId face) const;

  Nonce express_at(std::size_t idx, const StructuredName& name, std::optional<Tick> lifetime);
  void satisfy_at(std::size_t idx, const Interest& received, Bytes payload);
  void transmit(std::size_t from, FaceId face, std::variant<Interest, Data> packet);
  void on_interest_arrival(std::size_t idx, FaceId face, Interest interest);
  void on_data_arrival(std::size_t idx, FaceId face, Data data);
  void on_expiry(const Expiry& ex);
  void log(std::size_t idx, std::string ev, Json fields);

  Topology topology_;
  FabricConfig config_;
  std::vector<Endpoint> endpoints_;
  std::map<NodeId, std::size_t> by_id_;
  std::map<std::string, std::size_t> registry_;  // prefix -> owning endpoint
  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  std::uint64_t next_seq_ = 0;
  Tick now_ = 0;
  std::uint64_t data_drops_ = 0;
  Trace trace_;
};

}  // namespace ccncheck
