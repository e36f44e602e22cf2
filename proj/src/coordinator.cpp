#include <sstream>

#include "ccncheck/checkpoint.hpp"
#include "ccncheck/errors.hpp"

namespace ccncheck {
namespace {

constexpr std::uint64_t kAbortTimer = 1;
constexpr std::uint64_t kRetryTimer = 2;

std::uint64_t timer_tag(std::uint64_t kind, std::uint64_t epoch, unsigned attempt) {
  return (epoch << 8) | (static_cast<std::uint64_t>(attempt & 0x3F) << 2) | kind;
}

Json epoch_fields(std::uint64_t epoch) {
  Json j = Json::object();
  j["epoch"] = epoch;
  return j;
}

}  // namespace

Bytes encode_control(const ControlMessage& m) {
  return to_bytes((m.kind == ControlMessage::Kind::Drained ? "drained " : "done ") + std::to_string(m.epoch));
}

std::optional<ControlMessage> decode_control(const Bytes& payload) {
  std::istringstream in(to_string(payload));
  std::string word;
  std::uint64_t epoch = 0;
  if (!(in >> word >> epoch)) return std::nullopt;
  if (word == "drained") return ControlMessage{ControlMessage::Kind::Drained, epoch};
  if (word == "done") return ControlMessage{ControlMessage::Kind::Done, epoch};
  return std::nullopt;
}

Coordinator::Coordinator(std::string app, NodeId name, std::uint32_t node_number, SnapshotStore store,
                         CheckpointConfig config)
    : app_(std::move(app)),
      name_(std::move(name)),
      node_number_(node_number),
      store_(std::move(store)),
      config_(config),
      messenger_(app_, name_, node_number_) {}

Messenger Coordinator::fresh_messenger() const {
  Messenger m(app_, name_, node_number_);
  for (const auto& p : registry_) m.add_control_peer(p);
  return m;
}

void Coordinator::register_process(const Fabric& fabric, const NodeId& process) {
  if (fabric.prefix_owner(node_prefix(app_, process)) != process)
    throw Error("register_process: " + process + " has not registered " + node_prefix(app_, process));
  registry_.insert(process);
  messenger_.add_control_peer(process);
}

void Coordinator::boot(NodeContext& ctx) {
  ctx.register_prefix(node_prefix(app_, name_));
  Json j = Json::object();
  j["last_epoch"] = store_.max_epoch();
  auto committed = store_.latest_committed();
  j["last_committed"] = committed ? Json(*committed) : Json(nullptr);
  ctx.log("coordinator_up", std::move(j));
}

std::optional<std::uint64_t> Coordinator::in_progress() const {
  if (!round_) return std::nullopt;
  return round_->epoch;
}

std::uint64_t Coordinator::initiate_checkpoint(NodeContext& ctx) {
  if (round_) throw CheckpointInProgress("epoch " + std::to_string(round_->epoch) + " not committed");
  return begin(ctx, 0);
}

std::uint64_t Coordinator::begin(NodeContext& ctx, unsigned attempt) {
  std::uint64_t epoch = store_.max_epoch() + 1;
  store_.create_epoch(epoch);
  Json j = epoch_fields(epoch);
  j["processes"] = std::vector<NodeId>(registry_.begin(), registry_.end());
  j["attempt"] = attempt;
  ctx.log("checkpoint_begin", std::move(j));
  round_ = Round{epoch, attempt, false, {}, {}};
  if (registry_.empty()) {
    commit(ctx);
    return epoch;
  }
  broadcast(ctx, CheckMarker{CheckMarker::Phase::Suspend, epoch});
  ctx.set_timer(config_.abort_window, timer_tag(kAbortTimer, epoch, attempt));
  return epoch;
}

void Coordinator::broadcast(NodeContext& ctx, CheckMarker marker) {
  for (const auto& p : registry_) ctx.express(StructuredName::check(app_, p, marker));
}

void Coordinator::on_control(NodeContext& ctx, const Delivery& d) {
  auto msg = decode_control(d.payload);
  if (!msg || !round_ || msg->epoch != round_->epoch || !registry_.contains(d.peer)) {
    Json j = Json::object();
    j["peer"] = d.peer;
    j["message"] = to_string(d.payload);
    ctx.log("control_ignored", std::move(j));
    return;
  }
  if (msg->kind == ControlMessage::Kind::Drained) {
    round_->drained.insert(d.peer);
    if (!round_->snapshot_phase && round_->drained.size() == registry_.size()) {
      round_->snapshot_phase = true;
      ctx.log("snapshot_phase", epoch_fields(round_->epoch));
      broadcast(ctx, CheckMarker{CheckMarker::Phase::Snapshot, round_->epoch});
    }
    return;
  }
  round_->done.insert(d.peer);
  if (round_->snapshot_phase && round_->done.size() == registry_.size()) commit(ctx);
}

void Coordinator::commit(NodeContext& ctx) {
  auto epoch = round_->epoch;
  Manifest m{epoch, std::vector<NodeId>(registry_.begin(), registry_.end()), true};
  for (const auto& p : m.processes) {
    if (!store_.read_snapshot(epoch, p)) throw ProtocolViolation("commit without snapshot of " + p);
  }
  store_.write_manifest(m);
  ctx.log("commit", epoch_fields(epoch));
  round_.reset();
  broadcast(ctx, CheckMarker{CheckMarker::Phase::Resume, epoch});
}

void Coordinator::abort(NodeContext& ctx, const std::string& reason) {
  auto epoch = round_->epoch;
  auto attempt = round_->attempt;
  Json j = epoch_fields(epoch);
  j["reason"] = reason;
  j["attempt"] = attempt;
  ctx.log("abort", std::move(j));
  round_.reset();
  broadcast(ctx, CheckMarker{CheckMarker::Phase::Resume, epoch});
  if (attempt < config_.max_retries) {
    ctx.set_timer(config_.retry_delay, timer_tag(kRetryTimer, epoch, attempt + 1));
  }
}

void Coordinator::on_interest(NodeContext& ctx, const Interest& interest) {
  messenger_.handle_interest(ctx, interest);
}

void Coordinator::on_data(NodeContext& ctx, const Data& data) {
  if (!messenger_.handle_data(ctx, data)) return;
  for (const auto& d : messenger_.deliver_queue()) on_control(ctx, d);
}

void Coordinator::on_timeout(NodeContext& ctx, const Interest& interest) {
  // CHECK interests are one-way and always end here
  messenger_.handle_timeout(ctx, interest);
}

void Coordinator::on_timer(NodeContext& ctx, std::uint64_t tag) {
  std::uint64_t kind = tag & 3;
  std::uint64_t epoch = tag >> 8;
  auto attempt = static_cast<unsigned>((tag >> 2) & 0x3F);
  if (kind == kAbortTimer) {
    if (round_ && round_->epoch == epoch) {
      abort(ctx, round_->snapshot_phase ? "snapshot_timeout" : "flush_timeout");
    }
    return;
  }
  if (kind == kRetryTimer) {
    if (round_) return;
    Json j = epoch_fields(epoch);
    j["attempt"] = attempt;
    ctx.log("checkpoint_retry", std::move(j));
    begin(ctx, attempt);
  }
}

void Coordinator::on_crash() {
  round_.reset();
  messenger_ = fresh_messenger();
}

}  // namespace ccncheck
