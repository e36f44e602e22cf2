#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ccncheck/codec.hpp"
#include "ccncheck/fabric.hpp"

namespace ccncheck {

using TransferId = std::uint64_t;

// Sender-driven transfer over the pull-based fabric:
//
//   sender                          receiver
//     RTS  /app/receiver/RTS/sender   ->    (acked with empty Data)
//          <-   CTS /app/sender/CTS/receiver
//     Data(frame) satisfying the CTS  ->    delivered in channel order
//
// While the application is suspended for a checkpoint, new sends are queued
// and CTS interests for application channels are parked: the payload stays
// with the sender until resume.

enum class TransferState { Queued, RtsSent, CtsReceived, DataSent, Delivered, Failed };

const char* to_string(TransferState s) noexcept;

struct Transfer {
  TransferId id = 0;
  NodeId sender;
  NodeId receiver;
  std::uint64_t seq = 0;
  Bytes payload;
  TransferState state = TransferState::Queued;
  StructuredName rts_name;
  std::optional<StructuredName> cts_name;
  bool control = false;

  friend bool operator==(const Transfer&, const Transfer&) = default;
};

enum class Direction { Outbound, Inbound };

struct ChannelEntry {
  TransferId transfer = 0;  // 0 when not yet known (an RTS seen by the receiver)
  std::uint64_t seq = 0;
  std::string name;
  Tick tick = 0;
  std::string kind;  // "rts" | "payload"

  friend bool operator==(const ChannelEntry&, const ChannelEntry&) = default;
};

struct ChannelLog {
  NodeId peer;
  Direction direction = Direction::Outbound;
  std::vector<ChannelEntry> entries;
  std::optional<StructuredName> last_interest_sent;

  friend bool operator==(const ChannelLog&, const ChannelLog&) = default;
};

struct Delivery {
  NodeId peer;
  TransferId transfer = 0;
  std::uint64_t seq = 0;
  Bytes payload;
  bool control = false;

  friend bool operator==(const Delivery&, const Delivery&) = default;
};

/// The part of a messenger that survives in a checkpoint.
struct MessagingState {
  struct Outbound {
    ChannelLog log;
    std::uint64_t next_seq = 1;
    std::vector<Transfer> awaiting;  // RTS acknowledged, payload not yet sent
    friend bool operator==(const Outbound&, const Outbound&) = default;
  };
  struct Inbound {
    ChannelLog log;
    std::uint64_t rts_received = 0;
    std::uint64_t delivered_seq = 0;
    friend bool operator==(const Inbound&, const Inbound&) = default;
  };
  std::uint64_t next_transfer = 1;
  std::map<NodeId, Outbound> outbound;
  std::map<NodeId, Inbound> inbound;
  std::vector<Transfer> queued;

  friend bool operator==(const MessagingState&, const MessagingState&) = default;
};

/// Per-process communication handler. Driven only from its node's callbacks.
class Messenger {
 public:
  /// Expired CTS interests for a channel that still owes payloads are
  /// re-expressed up to this many times in a row.
  static constexpr std::uint32_t kMaxCtsRetries = 16;

  Messenger(std::string app, NodeId self, std::uint32_t node_number);

  const std::string& app() const noexcept { return app_; }
  const NodeId& self() const noexcept { return self_; }

  /// Channels to these peers carry protocol control traffic: never queued,
  /// parked, logged for checkpointing or flushed.
  void add_control_peer(const NodeId& peer) { control_peers_.insert(peer); }
  bool is_control_peer(const NodeId& peer) const { return control_peers_.contains(peer); }

  TransferId send(NodeContext& ctx, const NodeId& to, Bytes payload);
  TransferId send_control(NodeContext& ctx, const NodeId& to, Bytes payload);

  /// Each returns false when the packet is not messaging traffic.
  bool handle_interest(NodeContext& ctx, const Interest& interest);
  bool handle_data(NodeContext& ctx, const Data& data);
  bool handle_timeout(NodeContext& ctx, const Interest& interest);

  /// Drains payloads delivered since the last call, in delivery order.
  std::vector<Delivery> deliver_queue();
  const std::deque<Delivery>& pending_deliveries() const noexcept { return deliveries_; }
  void push_front_deliveries(std::vector<Delivery> undelivered);

  void suspend() noexcept { suspended_ = true; }
  bool suspended() const noexcept { return suspended_; }
  /// Releases queued sends and answers parked CTS interests.
  void resume(NodeContext& ctx);

  // ---- checkpoint support
  /// Outbound application channels with traffic since clear_dirty().
  std::vector<NodeId> dirty_channels() const;
  void clear_dirty();
  std::optional<StructuredName> last_interest_sent(const NodeId& peer) const;
  /// True once every RTS received from `peer` has been answered with a CTS.
  bool inbound_answered(const NodeId& peer) const;
  std::uint64_t rts_received(const NodeId& peer) const;
  std::uint64_t delivered_seq(const NodeId& peer) const;

  std::vector<StructuredName> unanswered_interests() const;
  std::vector<ChannelLog> channel_logs() const;
  MessagingState save() const;
  void restore(const MessagingState& state);
  /// Re-expresses an unanswered interest from a restored snapshot with a
  /// fresh nonce.
  void reissue(NodeContext& ctx, const StructuredName& name);

  const std::map<TransferId, Transfer>& transfers() const noexcept { return transfers_; }
  std::size_t parked_count() const;

 private:
  enum class Purpose { Rts, Cts };
  struct Outstanding {
    Purpose purpose;
    NodeId peer;
    TransferId transfer = 0;
  };
  struct OutChannel {
    ChannelLog log;
    std::uint64_t next_seq = 1;
    std::deque<TransferId> awaiting_cts;
    std::vector<Interest> parked;
    bool dirty = false;
  };
  struct InChannel {
    ChannelLog log;
    std::uint64_t rts_received = 0;
    std::uint64_t cts_issued = 0;
    std::uint64_t delivered_seq = 0;
    std::map<std::uint64_t, Delivery> reorder;
    std::uint32_t cts_retries = 0;
  };

  TransferId start(NodeContext& ctx, const NodeId& to, Bytes payload, bool control);
  void express_rts(NodeContext& ctx, Transfer& t);
  void on_rts(NodeContext& ctx, const Interest& rts);
  void on_cts(NodeContext& ctx, const Interest& cts);
  void answer_cts(NodeContext& ctx, const Interest& cts);
  void express_cts(NodeContext& ctx, const NodeId& peer, bool retry = false);
  std::size_t outstanding_cts(const NodeId& peer) const;
  OutChannel& out(const NodeId& peer);
  InChannel& in(const NodeId& peer);

  std::string app_;
  NodeId self_;
  std::uint32_t node_number_;
  std::set<NodeId> control_peers_;
  bool suspended_ = false;
  std::uint64_t next_transfer_ = 1;
  std::map<TransferId, Transfer> transfers_;
  std::vector<TransferId> queued_;
  std::map<NodeId, OutChannel> out_;
  std::map<NodeId, InChannel> in_;
  std::map<Nonce, Outstanding> outstanding_;
  std::deque<Delivery> deliveries_;
};

}  // namespace ccncheck
