#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ccncheck/messaging.hpp"
#include "ccncheck/snapshot.hpp"

namespace ccncheck {

struct CheckpointConfig {
  /// An epoch not committed this long after it began is aborted.
  Tick abort_window = 1000;
  Tick retry_delay = 50;
  unsigned max_retries = 3;
  /// A suspended process that hears nothing for this long resumes on its own
  /// (covers a coordinator that crashed mid-epoch).
  Tick local_abort_window = 2000;
};

/// Process -> coordinator reports, carried as control transfers.
struct ControlMessage {
  enum class Kind { Drained, Done } kind;
  std::uint64_t epoch = 0;
};

Bytes encode_control(const ControlMessage& m);
std::optional<ControlMessage> decode_control(const Bytes& payload);

/// Initiates epochs with one-way CHECK interests and commits them.
///
/// Epoch rounds (N is the epoch):
///   1. CHECK e<N> to every process: each suspends, flushes, reports drained.
///   2. CHECK snap-e<N> once all are drained: each snapshots, reports done.
///   3. Manifest committed, then CHECK resume-e<N> to every process.
/// Between rounds nothing is kept in memory: the next epoch number is read
/// back from the store and the registry is configuration.
class Coordinator final : public NodeAgent {
 public:
  Coordinator(std::string app, NodeId name, std::uint32_t node_number, SnapshotStore store,
              CheckpointConfig config = {});

  const NodeId& name() const noexcept { return name_; }
  const SnapshotStore& store() const noexcept { return store_; }

  /// Requires the process's own prefix to be routable.
  void register_process(const Fabric& fabric, const NodeId& process);
  const std::set<NodeId>& registry() const noexcept { return registry_; }

  /// Registers the coordinator prefix; call after every (re)start.
  void boot(NodeContext& ctx);
  std::uint64_t initiate_checkpoint(NodeContext& ctx);
  std::optional<std::uint64_t> in_progress() const;

  void on_interest(NodeContext& ctx, const Interest& interest) override;
  void on_data(NodeContext& ctx, const Data& data) override;
  void on_timeout(NodeContext& ctx, const Interest& interest) override;
  void on_timer(NodeContext& ctx, std::uint64_t tag) override;
  void on_crash() override;

 private:
  struct Round {
    std::uint64_t epoch = 0;
    unsigned attempt = 0;
    bool snapshot_phase = false;
    std::set<NodeId> drained;
    std::set<NodeId> done;
  };

  std::uint64_t begin(NodeContext& ctx, unsigned attempt);
  void on_control(NodeContext& ctx, const Delivery& d);
  void broadcast(NodeContext& ctx, CheckMarker marker);
  void commit(NodeContext& ctx);
  void abort(NodeContext& ctx, const std::string& reason);
  Messenger fresh_messenger() const;

  std::string app_;
  NodeId name_;
  std::uint32_t node_number_;
  SnapshotStore store_;
  CheckpointConfig config_;
  std::set<NodeId> registry_;
  Messenger messenger_;
  std::optional<Round> round_;
};

struct ConsistencyReport {
  std::uint64_t epoch = 0;
  bool committed = false;
  /// From the snapshots alone: a receipt in one snapshot whose send is
  /// missing from the sender's snapshot.
  std::size_t orphan_messages = 0;
  std::size_t orphan_interests = 0;
  /// From the trace: receipts before the receiver's snapshot event whose send
  /// comes after the sender's snapshot event.
  std::size_t trace_orphan_messages = 0;
  std::size_t trace_orphan_interests = 0;
  /// Application payloads sent but not yet arrived at each snapshot event.
  std::size_t in_flight_at_snapshot = 0;
  std::vector<std::string> details;

  bool ok() const noexcept {
    return orphan_messages + orphan_interests + trace_orphan_messages + trace_orphan_interests +
               in_flight_at_snapshot ==
           0;
  }
};

ConsistencyReport verify_consistency(const GlobalCheckpoint& g, const Trace& trace);

}  // namespace ccncheck
