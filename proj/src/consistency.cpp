#include <algorithm>
#include <functional>
#include <map>
#include <set>

#include "ccncheck/checkpoint.hpp"

namespace ccncheck {
namespace {

bool has_entry(const LocalSnapshot& s, const NodeId& peer, const std::string& kind,
               const std::function<bool(const ChannelEntry&)>& match) {
  auto it = s.messaging.outbound.find(peer);
  if (it == s.messaging.outbound.end()) return false;
  return std::any_of(it->second.log.entries.begin(), it->second.log.entries.end(),
                     [&](const ChannelEntry& e) { return e.kind == kind && match(e); });
}

void check_snapshots(const GlobalCheckpoint& g, ConsistencyReport& r) {
  for (const auto& [receiver, snap] : g.snapshots) {
    for (const auto& [sender, in] : snap.messaging.inbound) {
      auto sit = g.snapshots.find(sender);
      for (const auto& e : in.log.entries) {
        if (e.kind == "payload") {
          bool ok = sit != g.snapshots.end() &&
                    has_entry(sit->second, receiver, "rts", [&](const ChannelEntry& o) { return o.transfer == e.transfer; });
          if (!ok) {
            ++r.orphan_messages;
            r.details.push_back("orphan message: " + receiver + " received transfer " +
                                std::to_string(e.transfer) + " not sent in " + sender + "'s snapshot");
          }
        } else if (e.kind == "rts") {
          bool ok = sit != g.snapshots.end() &&
                    has_entry(sit->second, receiver, "rts", [&](const ChannelEntry& o) { return o.seq == e.seq; });
          if (!ok) {
            ++r.orphan_interests;
            r.details.push_back("orphan interest: " + receiver + " received RTS #" + std::to_string(e.seq) +
                                " from " + sender + " not recorded by the sender");
          }
        }
      }
    }
  }
}

void check_trace(const GlobalCheckpoint& g, const Trace& trace, ConsistencyReport& r) {
  const auto& ev = trace.events();
  std::map<NodeId, std::size_t> snap_at;
  for (std::size_t i = 0; i < ev.size(); ++i) {
    const auto& e = ev[i];
    if (e.ev == "snapshot" && e.num("epoch") == g.epoch && g.snapshots.contains(e.node)) snap_at[e.node] = i;
  }
  if (snap_at.empty()) return;
  auto before = [&](const NodeId& node, std::size_t i) {
    auto it = snap_at.find(node);
    return it != snap_at.end() && i < it->second;
  };

  // first position of each send, keyed the way receipts refer to it
  std::map<std::pair<NodeId, TransferId>, std::size_t> payload_sent;
  std::map<Nonce, std::pair<NodeId, std::size_t>> rts_sent;
  for (std::size_t i = 0; i < ev.size(); ++i) {
    const auto& e = ev[i];
    if (e.ev == "payload_sent" && !e.flag("control")) payload_sent.try_emplace({e.node, e.num("transfer")}, i);
    if (e.ev == "rts_issued" && !e.flag("control")) rts_sent.try_emplace(e.num("nonce"), std::pair{e.node, i});
  }

  for (std::size_t i = 0; i < ev.size(); ++i) {
    const auto& e = ev[i];
    if (e.ev == "payload_delivered" && !e.flag("control") && before(e.node, i)) {
      NodeId sender = e.str("peer");
      if (!snap_at.contains(sender)) continue;
      auto it = payload_sent.find({sender, e.num("transfer")});
      if (it == payload_sent.end() || !before(sender, it->second)) {
        ++r.trace_orphan_messages;
        r.details.push_back("trace orphan message: transfer " + std::to_string(e.num("transfer")) + " at " + e.node);
      }
    }
    if (e.ev == "interest_recv" && e.flag("app") && before(e.node, i)) {
      auto it = rts_sent.find(e.num("nonce"));
      if (it == rts_sent.end()) continue;  // not an application RTS
      const auto& [sender, at] = it->second;
      if (snap_at.contains(sender) && !before(sender, at)) {
        ++r.trace_orphan_interests;
        r.details.push_back("trace orphan interest: RTS nonce " + std::to_string(e.num("nonce")) + " at " + e.node);
      }
    }
  }

  // drain: application payloads outstanding at each snapshot event
  std::map<Nonce, std::pair<NodeId, NodeId>> in_flight;  // CTS nonce -> (sender, receiver)
  for (std::size_t i = 0; i < ev.size(); ++i) {
    const auto& e = ev[i];
    if (e.ev == "payload_sent" && !e.flag("control")) in_flight[e.num("nonce")] = {e.node, e.str("peer")};
    if ((e.ev == "data_recv" && e.flag("app")) || e.ev == "data_dropped") in_flight.erase(e.num("nonce"));
    if (e.ev == "snapshot" && e.num("epoch") == g.epoch && snap_at.contains(e.node) && snap_at[e.node] == i) {
      for (const auto& [nonce, ends] : in_flight) {
        if (ends.first == e.node || ends.second == e.node) {
          ++r.in_flight_at_snapshot;
          r.details.push_back("payload in flight " + ends.first + "->" + ends.second + " at " + e.node +
                              "'s snapshot");
        }
      }
    }
  }
}

}  // namespace

ConsistencyReport verify_consistency(const GlobalCheckpoint& g, const Trace& trace) {
  ConsistencyReport r;
  r.epoch = g.epoch;
  r.committed = g.committed;
  check_snapshots(g, r);
  check_trace(g, trace, r);
  return r;
}

}  // namespace ccncheck
