#include "ccncheck/process.hpp"

#include "ccncheck/errors.hpp"

namespace ccncheck {
namespace {

Json epoch_fields(std::uint64_t epoch) {
  Json j = Json::object();
  j["epoch"] = epoch;
  return j;
}

}  // namespace

ProcessNode::ProcessNode(NodeId self, std::uint32_t node_number, AppFactory factory, SnapshotStore store,
                         ProcessConfig config)
    : self_(std::move(self)),
      node_number_(node_number),
      factory_(std::move(factory)),
      store_(std::move(store)),
      config_(std::move(config)),
      app_(factory_()),
      messenger_(config_.app, self_, node_number_) {
  reset_volatile();
}

void ProcessNode::reset_volatile() {
  messenger_ = Messenger(config_.app, self_, node_number_);
  messenger_.add_control_peer(config_.coordinator);
  start_due_ = tick_due_ = false;
  epoch_.reset();
  flushes_.clear();
  held_flushes_.clear();
  drained_ = snapshotted_ = false;
  peers_.clear();
  discovered_.clear();
  discovering_.clear();
  pending_.clear();
  attempt_ = waits_ = 0;
}

void ProcessNode::boot(NodeContext& ctx, Tick delay) {
  reset_volatile();
  app_ = factory_();
  phase_ = Phase::Running;
  ctx.register_prefix(node_prefix(config_.app, self_));
  ctx.set_timer(delay, kStartTimer);
}

LocalSnapshot ProcessNode::take_snapshot(Tick now) const {
  LocalSnapshot s;
  s.process = self_;
  s.epoch = epoch_.value_or(0);
  s.taken_at = now;
  s.app_step = app_->step_index();
  s.app_state = app_->serialize();
  s.messaging = messenger_.save();
  s.unanswered_interests = messenger_.unanswered_interests();
  for (const auto& d : messenger_.pending_deliveries()) {
    if (!d.control) s.delivered_not_consumed.push_back(d);
  }
  s.peers = app_->peers();
  return s;
}

// ------------------------------------------------------------------ packets

void ProcessNode::on_interest(NodeContext& ctx, const Interest& interest) {
  if (phase_ == Phase::Down) return;
  const auto& n = interest.name;
  if (n.app != config_.app || n.receiver != self_) return;
  if (messenger_.handle_interest(ctx, interest)) {
    answer_held_flushes(ctx);
    return;
  }
  switch (n.signal) {
    case Signal::Check: handle_check(ctx, n.marker); break;
    case Signal::Flush: on_flush(ctx, interest); break;
    case Signal::Discover: ctx.satisfy(interest, to_bytes("alive")); break;
    default: ctx.log("unexpected_interest", Json{{"name", format_name(n)}});
  }
}

void ProcessNode::on_data(NodeContext& ctx, const Data& data) {
  if (phase_ == Phase::Down) return;
  if (auto it = flushes_.find(data.nonce); it != flushes_.end()) {
    NodeId peer = it->second;
    flushes_.erase(it);
    Json j = epoch_fields(epoch_.value_or(0));
    j["peer"] = peer;
    ctx.log("flush_acked", std::move(j));
    if (flushes_.empty() && phase_ == Phase::Suspended && !drained_) report_drained(ctx);
    return;
  }
  if (discovering_.contains(data.nonce)) {
    on_discover_reply(ctx, data.nonce);
    return;
  }
  if (messenger_.handle_data(ctx, data)) consume(ctx);
}

void ProcessNode::on_timeout(NodeContext& ctx, const Interest& interest) {
  if (phase_ == Phase::Down) return;
  if (auto it = flushes_.find(interest.nonce); it != flushes_.end()) {
    Json j = epoch_fields(epoch_.value_or(0));
    j["peer"] = it->second;
    ctx.log("flush_timeout", std::move(j));
    flushes_.erase(it);
    return;
  }
  if (discovering_.contains(interest.nonce)) {
    on_discover_timeout(ctx, interest.nonce);
    return;
  }
  messenger_.handle_timeout(ctx, interest);
}

void ProcessNode::on_timer(NodeContext& ctx, std::uint64_t tag) {
  switch (tag & 0xF) {
    case kStartTimer: start_app(ctx); break;
    case kTickTimer: tick_app(ctx); break;
    case kDiscoverTimer:
      if (phase_ == Phase::Recovering) discover_round(ctx);
      break;
    case kLocalAbortTimer:
      if (phase_ == Phase::Suspended && epoch_ == (tag >> 4)) {
        Json j = epoch_fields(*epoch_);
        j["local"] = true;
        ctx.log("abort", std::move(j));
        resume(ctx, "local_abort");
      }
      break;
  }
}

void ProcessNode::on_crash() {
  phase_ = Phase::Down;
  reset_volatile();
}

// --------------------------------------------------------------- checkpoint

void ProcessNode::handle_check(NodeContext& ctx, const std::optional<CheckMarker>& marker) {
  auto ignore = [&](const char* why) {
    Json j = Json::object();
    j["marker"] = marker ? Json(format_marker(*marker)) : Json(nullptr);
    j["why"] = why;
    ctx.log("check_ignored", std::move(j));
  };
  if (!marker) return ignore("no_marker");
  if (phase_ != Phase::Running && phase_ != Phase::Suspended) return ignore("not_running");
  const auto epoch = marker->epoch;
  switch (marker->phase) {
    case CheckMarker::Phase::Suspend:
      if (phase_ == Phase::Suspended && epoch_ == epoch) return ignore("duplicate");
      suspend(ctx, epoch);
      return;
    case CheckMarker::Phase::Snapshot:
      if (phase_ != Phase::Suspended || epoch_ != epoch || !drained_ || snapshotted_) return ignore("out_of_order");
      snapshot(ctx);
      return;
    case CheckMarker::Phase::Resume:
      if (phase_ != Phase::Suspended || epoch_ != epoch) return ignore("not_suspended");
      resume(ctx, "resume");
      return;
  }
}

void ProcessNode::suspend(NodeContext& ctx, std::uint64_t epoch) {
  phase_ = Phase::Suspended;
  epoch_ = epoch;
  flushes_.clear();
  drained_ = snapshotted_ = false;
  messenger_.suspend();
  ctx.log("suspend", epoch_fields(epoch));
  ctx.set_timer(config_.checkpoint.local_abort_window, kLocalAbortTimer | (epoch << 4));
  flush_channels(ctx);
}

void ProcessNode::flush_channels(NodeContext& ctx) {
  for (const auto& peer : messenger_.dirty_channels()) {
    auto last = messenger_.last_interest_sent(peer);
    if (!last) continue;
    auto name = StructuredName::flush(config_.app, peer, format_name(*last));
    auto nonce = ctx.express(name);
    flushes_[nonce] = peer;
    Json j = epoch_fields(*epoch_);
    j["peer"] = peer;
    j["name"] = format_name(name);
    j["nonce"] = nonce;
    ctx.log("flush_sent", std::move(j));
  }
  if (flushes_.empty()) report_drained(ctx);
}

void ProcessNode::on_flush(NodeContext& ctx, const Interest& flush) {
  std::optional<StructuredName> last;
  try {
    if (flush.name.appended) last = parse_name(*flush.name.appended);
  } catch (const MalformedName&) {
  }
  if (!last || !last->sender) {
    ctx.log("flush_malformed", Json{{"name", format_name(flush.name)}});
    return;
  }
  held_flushes_.push_back(flush);
  answer_held_flushes(ctx);
}

void ProcessNode::answer_held_flushes(NodeContext& ctx) {
  std::vector<Interest> still_held;
  for (const auto& flush : held_flushes_) {
    NodeId flusher = *parse_name(*flush.name.appended).sender;
    if (!ctx.can_satisfy(flush.nonce)) continue;
    if (!messenger_.inbound_answered(flusher)) {
      still_held.push_back(flush);
      continue;
    }
    ctx.satisfy(flush, Bytes{});
    Json j = Json::object();
    j["peer"] = flusher;
    j["delivered_seq"] = messenger_.delivered_seq(flusher);
    ctx.log("flush_answered", std::move(j));
  }
  held_flushes_ = std::move(still_held);
}

void ProcessNode::report_drained(NodeContext& ctx) {
  drained_ = true;
  ctx.log("drained", epoch_fields(*epoch_));
  messenger_.send_control(ctx, config_.coordinator, encode_control({ControlMessage::Kind::Drained, *epoch_}));
}

void ProcessNode::snapshot(NodeContext& ctx) {
  auto s = take_snapshot(ctx.now());
  store_.write_snapshot(s);
  Json j = epoch_fields(s.epoch);
  j["app_step"] = s.app_step;
  j["unanswered"] = s.unanswered_interests.size();
  j["queued"] = s.messaging.queued.size();
  ctx.log("snapshot", std::move(j));
  messenger_.clear_dirty();
  snapshotted_ = true;
  messenger_.send_control(ctx, config_.coordinator, encode_control({ControlMessage::Kind::Done, s.epoch}));
}

void ProcessNode::resume(NodeContext& ctx, const std::string& why) {
  Json j = epoch_fields(epoch_.value_or(0));
  j["reason"] = why;
  ctx.log("resume", std::move(j));
  phase_ = Phase::Running;
  epoch_.reset();
  flushes_.clear();
  messenger_.resume(ctx);
  if (start_due_) start_app(ctx);
  if (tick_due_) tick_app(ctx);
  consume(ctx);
}

// -------------------------------------------------------------- application

void ProcessNode::start_app(NodeContext& ctx) {
  if (phase_ != Phase::Running) {
    start_due_ = true;
    return;
  }
  start_due_ = false;
  if (app_->started()) return;
  apply(ctx, app_->start());
  if (app_->tick_interval() > 0 && !app_->finished()) ctx.set_timer(app_->tick_interval(), kTickTimer);
}

void ProcessNode::tick_app(NodeContext& ctx) {
  if (phase_ != Phase::Running) {
    tick_due_ = true;
    return;
  }
  tick_due_ = false;
  if (app_->finished()) return;
  apply(ctx, app_->on_tick());
  if (!app_->finished()) ctx.set_timer(app_->tick_interval(), kTickTimer);
}

void ProcessNode::consume(NodeContext& ctx) {
  if (phase_ != Phase::Running) return;
  for (const auto& d : messenger_.deliver_queue()) {
    if (d.control) continue;
    apply(ctx, app_->on_message(d.peer, d.payload));
  }
}

void ProcessNode::apply(NodeContext& ctx, const StepResult& r) {
  for (const auto& o : r.outputs) {
    Json j = Json::object();
    j["step"] = o.step;
    j["value"] = o.value;
    ctx.log("app_output", std::move(j));
  }
  for (const auto& s : r.sends) messenger_.send(ctx, s.to, s.payload);
}

}  // namespace ccncheck
