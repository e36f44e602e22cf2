#include "ccncheck/messaging.hpp"

#include <algorithm>

#include "ccncheck/errors.hpp"

namespace ccncheck {

const char* to_string(TransferState s) noexcept {
  switch (s) {
    case TransferState::Queued: return "queued";
    case TransferState::RtsSent: return "rts_sent";
    case TransferState::CtsReceived: return "cts_received";
    case TransferState::DataSent: return "data_sent";
    case TransferState::Delivered: return "delivered";
    case TransferState::Failed: return "failed";
  }
  return "?";
}

Messenger::Messenger(std::string app, NodeId self, std::uint32_t node_number)
    : app_(std::move(app)), self_(std::move(self)), node_number_(node_number) {}

Messenger::OutChannel& Messenger::out(const NodeId& peer) {
  auto [it, inserted] = out_.try_emplace(peer);
  if (inserted) {
    it->second.log.peer = peer;
    it->second.log.direction = Direction::Outbound;
  }
  return it->second;
}

Messenger::InChannel& Messenger::in(const NodeId& peer) {
  auto [it, inserted] = in_.try_emplace(peer);
  if (inserted) {
    it->second.log.peer = peer;
    it->second.log.direction = Direction::Inbound;
  }
  return it->second;
}

// ---------------------------------------------------------------- sending

TransferId Messenger::send(NodeContext& ctx, const NodeId& to, Bytes payload) {
  return start(ctx, to, std::move(payload), is_control_peer(to));
}

TransferId Messenger::send_control(NodeContext& ctx, const NodeId& to, Bytes payload) {
  add_control_peer(to);
  return start(ctx, to, std::move(payload), true);
}

TransferId Messenger::start(NodeContext& ctx, const NodeId& to, Bytes payload, bool control) {
  if (to == self_) throw ProtocolViolation("send to self");
  Transfer t;
  t.id = (static_cast<TransferId>(node_number_ + 1) << 40) | next_transfer_++;
  t.sender = self_;
  t.receiver = to;
  t.seq = out(to).next_seq++;
  t.payload = std::move(payload);
  t.rts_name = StructuredName::rts(app_, to, self_);
  t.control = control;
  auto id = t.id;
  auto& stored = transfers_.emplace(id, std::move(t)).first->second;
  if (suspended_ && !control) {
    queued_.push_back(id);
    Json j = Json::object();
    j["transfer"] = id;
    j["peer"] = to;
    ctx.log("send_queued", std::move(j));
    return id;
  }
  express_rts(ctx, stored);
  return id;
}

void Messenger::express_rts(NodeContext& ctx, Transfer& t) {
  auto nonce = ctx.express(t.rts_name);
  outstanding_[nonce] = Outstanding{Purpose::Rts, t.receiver, t.id};
  t.state = TransferState::RtsSent;
  auto& ch = out(t.receiver);
  ch.awaiting_cts.push_back(t.id);
  std::string uri = format_name(t.rts_name);
  if (!t.control) {
    ch.log.entries.push_back({t.id, t.seq, uri, ctx.now(), "rts"});
    ch.log.last_interest_sent = t.rts_name;
    ch.dirty = true;
  }
  Json j = Json::object();
  j["transfer"] = t.id;
  j["chan_seq"] = t.seq;
  j["peer"] = t.receiver;
  j["name"] = uri;
  j["nonce"] = nonce;
  j["control"] = t.control;
  ctx.log("rts_issued", std::move(j));
}

// -------------------------------------------------------------- receiving

bool Messenger::handle_interest(NodeContext& ctx, const Interest& interest) {
  const auto& n = interest.name;
  if (n.app != app_ || n.receiver != self_) return false;
  if (n.signal == Signal::Rts) {
    on_rts(ctx, interest);
    return true;
  }
  if (n.signal == Signal::Cts) {
    on_cts(ctx, interest);
    return true;
  }
  return false;
}

void Messenger::on_rts(NodeContext& ctx, const Interest& rts) {
  const NodeId& peer = *rts.name.sender;
  ctx.satisfy(rts, Bytes{});  // empty ack drains the RTS breadcrumbs
  auto& ch = in(peer);
  ++ch.rts_received;
  if (!is_control_peer(peer))
    ch.log.entries.push_back({0, ch.rts_received, format_name(rts.name), ctx.now(), "rts"});
  express_cts(ctx, peer);
}

void Messenger::express_cts(NodeContext& ctx, const NodeId& peer, bool retry) {
  auto& ch = in(peer);
  auto name = StructuredName::cts(app_, peer, self_);
  auto nonce = ctx.express(name);
  outstanding_[nonce] = Outstanding{Purpose::Cts, peer, 0};
  if (!retry) ++ch.cts_issued;
  ch.log.last_interest_sent = name;
  Json j = Json::object();
  j["peer"] = peer;
  j["chan_seq"] = ch.cts_issued;
  j["name"] = format_name(name);
  j["nonce"] = nonce;
  j["control"] = is_control_peer(peer);
  if (retry) j["retry"] = true;
  ctx.log("cts_issued", std::move(j));
}

std::size_t Messenger::outstanding_cts(const NodeId& peer) const {
  return static_cast<std::size_t>(std::count_if(outstanding_.begin(), outstanding_.end(), [&](const auto& kv) {
    return kv.second.purpose == Purpose::Cts && kv.second.peer == peer;
  }));
}

void Messenger::on_cts(NodeContext& ctx, const Interest& cts) {
  const NodeId& peer = *cts.name.sender;
  if (suspended_ && !is_control_peer(peer)) {
    out(peer).parked.push_back(cts);
    Json j = Json::object();
    j["peer"] = peer;
    j["nonce"] = cts.nonce;
    ctx.log("cts_parked", std::move(j));
    return;
  }
  answer_cts(ctx, cts);
}

void Messenger::answer_cts(NodeContext& ctx, const Interest& cts) {
  const NodeId& peer = *cts.name.sender;
  auto& ch = out(peer);
  if (ch.awaiting_cts.empty()) {
    ctx.satisfy(cts, encode_frame(Frame{}));
    Json j = Json::object();
    j["peer"] = peer;
    j["nonce"] = cts.nonce;
    ctx.log("orphan_cts", std::move(j));
    return;
  }
  auto& t = transfers_.at(ch.awaiting_cts.front());
  ch.awaiting_cts.pop_front();
  t.state = TransferState::CtsReceived;
  t.cts_name = cts.name;
  ctx.satisfy(cts, encode_frame(Frame{t.id, t.seq, t.payload}));
  t.state = TransferState::DataSent;
  if (!t.control) ch.dirty = true;
  Json j = Json::object();
  j["transfer"] = t.id;
  j["chan_seq"] = t.seq;
  j["peer"] = peer;
  j["nonce"] = cts.nonce;
  j["control"] = t.control;
  ctx.log("payload_sent", std::move(j));
}

bool Messenger::handle_data(NodeContext& ctx, const Data& data) {
  auto it = outstanding_.find(data.nonce);
  if (it == outstanding_.end()) return false;
  Outstanding o = it->second;
  outstanding_.erase(it);
  if (o.purpose == Purpose::Rts) return true;  // RTS ack, nothing to do

  auto frame = decode_frame(data.payload);
  if (!frame) throw ProtocolViolation("undecodable payload from " + o.peer);
  Json base = Json::object();
  base["peer"] = o.peer;
  if (frame->stale()) {
    base["nonce"] = data.nonce;
    ctx.log("cts_stale", std::move(base));
    return true;
  }
  auto& ch = in(o.peer);
  bool control = is_control_peer(o.peer);
  if (control) {
    // either end of a control channel may restart on its own, so sequence
    // numbers there carry no ordering or dedup meaning
    Json j = Json::object();
    j["transfer"] = frame->transfer;
    j["chan_seq"] = frame->seq;
    j["peer"] = o.peer;
    j["control"] = true;
    ctx.log("payload_delivered", std::move(j));
    deliveries_.push_back(Delivery{o.peer, frame->transfer, frame->seq, std::move(frame->payload), true});
    return true;
  }
  if (frame->seq <= ch.delivered_seq || ch.reorder.contains(frame->seq)) {
    base["transfer"] = frame->transfer;
    base["chan_seq"] = frame->seq;
    ctx.log("duplicate_suppressed", std::move(base));
    return true;
  }
  ch.reorder.emplace(frame->seq,
                     Delivery{o.peer, frame->transfer, frame->seq, std::move(frame->payload), control});
  for (auto next = ch.reorder.find(ch.delivered_seq + 1); next != ch.reorder.end();
       next = ch.reorder.find(ch.delivered_seq + 1)) {
    Delivery d = std::move(next->second);
    ch.reorder.erase(next);
    ch.delivered_seq = d.seq;
    ch.cts_retries = 0;
    std::string uri = format_name(data.name);
    if (!control) ch.log.entries.push_back({d.transfer, d.seq, uri, ctx.now(), "payload"});
    Json j = Json::object();
    j["transfer"] = d.transfer;
    j["chan_seq"] = d.seq;
    j["peer"] = o.peer;
    j["control"] = control;
    ctx.log("payload_delivered", std::move(j));
    deliveries_.push_back(std::move(d));
  }
  return true;
}

bool Messenger::handle_timeout(NodeContext& ctx, const Interest& interest) {
  auto it = outstanding_.find(interest.nonce);
  if (it == outstanding_.end()) return false;
  Outstanding o = it->second;
  outstanding_.erase(it);
  if (o.purpose == Purpose::Rts) {
    auto& t = transfers_.at(o.transfer);
    if (t.state == TransferState::RtsSent) {
      t.state = TransferState::Failed;
      std::erase(out(o.peer).awaiting_cts, t.id);
      Json j = Json::object();
      j["transfer"] = t.id;
      j["peer"] = o.peer;
      j["reason"] = "rts_timeout";
      ctx.log("transfer_failed", std::move(j));
    }
    return true;
  }
  Json j = Json::object();
  j["peer"] = o.peer;
  j["nonce"] = interest.nonce;
  ctx.log("cts_expired", std::move(j));
  if (is_control_peer(o.peer)) return true;
  auto& ch = in(o.peer);
  if (ch.rts_received <= ch.delivered_seq + ch.reorder.size() + outstanding_cts(o.peer)) return true;
  if (ch.cts_retries >= kMaxCtsRetries) {
    Json f = Json::object();
    f["peer"] = o.peer;
    f["chan_seq"] = ch.delivered_seq + 1;
    f["reason"] = "cts_timeout";
    ctx.log("transfer_failed", std::move(f));
    return true;
  }
  ++ch.cts_retries;
  express_cts(ctx, o.peer, true);
  return true;
}

std::vector<Delivery> Messenger::deliver_queue() {
  std::vector<Delivery> out(std::make_move_iterator(deliveries_.begin()),
                            std::make_move_iterator(deliveries_.end()));
  deliveries_.clear();
  return out;
}

void Messenger::push_front_deliveries(std::vector<Delivery> undelivered) {
  deliveries_.insert(deliveries_.begin(), std::make_move_iterator(undelivered.begin()),
                     std::make_move_iterator(undelivered.end()));
}

void Messenger::resume(NodeContext& ctx) {
  suspended_ = false;
  for (auto& [peer, ch] : out_) {
    auto parked = std::move(ch.parked);
    ch.parked.clear();
    for (const auto& cts : parked) {
      if (ctx.can_satisfy(cts.nonce)) {
        answer_cts(ctx, cts);
      } else {
        Json j = Json::object();
        j["peer"] = peer;
        j["nonce"] = cts.nonce;
        ctx.log("parked_cts_expired", std::move(j));
      }
    }
  }
  auto queued = std::move(queued_);
  queued_.clear();
  for (auto id : queued) express_rts(ctx, transfers_.at(id));
}

// ------------------------------------------------------ checkpoint support

std::vector<NodeId> Messenger::dirty_channels() const {
  std::vector<NodeId> peers;
  for (const auto& [peer, ch] : out_) {
    if (ch.dirty && !is_control_peer(peer)) peers.push_back(peer);
  }
  return peers;
}

void Messenger::clear_dirty() {
  for (auto& [peer, ch] : out_) ch.dirty = false;
}

std::optional<StructuredName> Messenger::last_interest_sent(const NodeId& peer) const {
  auto it = out_.find(peer);
  if (it == out_.end()) return std::nullopt;
  return it->second.log.last_interest_sent;
}

bool Messenger::inbound_answered(const NodeId& peer) const {
  auto it = in_.find(peer);
  return it == in_.end() || it->second.cts_issued >= it->second.rts_received;
}

std::uint64_t Messenger::rts_received(const NodeId& peer) const {
  auto it = in_.find(peer);
  return it == in_.end() ? 0 : it->second.rts_received;
}

std::uint64_t Messenger::delivered_seq(const NodeId& peer) const {
  auto it = in_.find(peer);
  return it == in_.end() ? 0 : it->second.delivered_seq;
}

std::vector<StructuredName> Messenger::unanswered_interests() const {
  std::vector<StructuredName> names;
  for (const auto& [nonce, o] : outstanding_) {
    if (is_control_peer(o.peer)) continue;
    if (o.purpose == Purpose::Cts) names.push_back(StructuredName::cts(app_, o.peer, self_));
  }
  return names;
}

std::vector<ChannelLog> Messenger::channel_logs() const {
  std::vector<ChannelLog> logs;
  for (const auto& [peer, ch] : out_) {
    if (!is_control_peer(peer)) logs.push_back(ch.log);
  }
  for (const auto& [peer, ch] : in_) {
    if (!is_control_peer(peer)) logs.push_back(ch.log);
  }
  return logs;
}

MessagingState Messenger::save() const {
  MessagingState s;
  s.next_transfer = next_transfer_;
  for (const auto& [peer, ch] : out_) {
    if (is_control_peer(peer)) continue;
    auto& o = s.outbound[peer];
    o.log = ch.log;
    o.next_seq = ch.next_seq;
    for (auto id : ch.awaiting_cts) o.awaiting.push_back(transfers_.at(id));
  }
  for (const auto& [peer, ch] : in_) {
    if (is_control_peer(peer)) continue;
    auto& i = s.inbound[peer];
    i.log = ch.log;
    i.rts_received = ch.rts_received;
    i.delivered_seq = ch.delivered_seq;
  }
  for (auto id : queued_) s.queued.push_back(transfers_.at(id));
  return s;
}

void Messenger::restore(const MessagingState& s) {
  transfers_.clear();
  queued_.clear();
  out_.clear();
  in_.clear();
  outstanding_.clear();
  deliveries_.clear();
  next_transfer_ = s.next_transfer;
  for (const auto& [peer, o] : s.outbound) {
    auto& ch = out(peer);
    ch.log = o.log;
    ch.next_seq = o.next_seq;
    for (const auto& t : o.awaiting) {
      auto& stored = transfers_.emplace(t.id, t).first->second;
      stored.state = TransferState::RtsSent;
      ch.awaiting_cts.push_back(t.id);
    }
  }
  for (const auto& [peer, i] : s.inbound) {
    auto& ch = in(peer);
    ch.log = i.log;
    ch.rts_received = i.rts_received;
    // every restored RTS was answered before the snapshot was taken
    ch.cts_issued = i.rts_received;
    ch.delivered_seq = i.delivered_seq;
  }
  for (const auto& t : s.queued) {
    transfers_.emplace(t.id, t);
    queued_.push_back(t.id);
  }
}

void Messenger::reissue(NodeContext& ctx, const StructuredName& name) {
  if (name.signal != Signal::Cts || name.sender != self_)
    throw ProtocolViolation("only our own CTS interests can be reissued: " + format_name(name));
  const NodeId& peer = name.receiver;
  auto nonce = ctx.express(name);
  outstanding_[nonce] = Outstanding{Purpose::Cts, peer, 0};
  Json j = Json::object();
  j["peer"] = peer;
  j["chan_seq"] = in(peer).cts_issued;
  j["name"] = format_name(name);
  j["nonce"] = nonce;
  j["control"] = false;
  j["reissued"] = true;
  ctx.log("cts_issued", std::move(j));
}

std::size_t Messenger::parked_count() const {
  std::size_t n = 0;
  for (const auto& [peer, ch] : out_) n += ch.parked.size();
  return n;
}

}  // namespace ccncheck
