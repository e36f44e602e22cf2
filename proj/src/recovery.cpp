#include "ccncheck/recovery.hpp"

#include <algorithm>

#include "ccncheck/errors.hpp"
#include "ccncheck/process.hpp"

namespace ccncheck {

RestartPlan plan_restart(const SnapshotStore& store, std::optional<std::uint64_t> epoch) {
  if (!epoch) epoch = store.latest_committed();
  if (!epoch) throw NoCheckpoint("no committed checkpoint in " + store.root().string());
  auto m = store.read_manifest(*epoch);
  if (!m || !m->committed) throw NoCheckpoint("epoch " + std::to_string(*epoch) + " is not committed");
  RestartPlan plan;
  plan.epoch = *epoch;
  plan.processes = m->processes;
  for (const auto& p : m->processes) {
    auto s = store.read_snapshot(*epoch, p);
    if (!s) throw Error("epoch " + std::to_string(*epoch) + " is missing the snapshot of " + p);
    plan.pending_to_reissue[p] = s->unanswered_interests;
  }
  return plan;
}

// ------------------------------------------------------ process side

void ProcessNode::recover(NodeContext& ctx, const std::optional<LocalSnapshot>& snapshot, std::uint64_t epoch) {
  reset_volatile();
  app_ = factory_();
  phase_ = Phase::Recovering;
  restored_epoch_ = epoch;
  if (snapshot) {
    app_->deserialize(snapshot->app_state);
    messenger_.restore(snapshot->messaging);
    messenger_.push_front_deliveries(snapshot->delivered_not_consumed);
    pending_ = snapshot->unanswered_interests;
    peers_ = snapshot->peers;
  } else {
    peers_ = app_->peers();
  }
  messenger_.suspend();
  ctx.register_prefix(node_prefix(config_.app, self_));
  Json j = Json::object();
  j["epoch"] = epoch;
  j["app_step"] = app_->step_index();
  j["pending"] = pending_.size();
  ctx.log("restore", std::move(j));
  discover_round(ctx);
}

void ProcessNode::discover_round(NodeContext& ctx) {
  std::vector<NodeId> missing;
  for (const auto& p : peers_)
    if (!discovered_.contains(p)) missing.push_back(p);
  if (missing.empty()) {
    finish_discovery(ctx);
    return;
  }
  const auto& rc = config_.recovery;
  Tick lifetime = rc.discover_timeout << std::min(attempt_, rc.discover_attempts - 1);
  for (const auto& peer : missing) {
    auto nonce = ctx.express(StructuredName::discover(config_.app, peer), lifetime);
    discovering_[nonce] = peer;
    Json j = Json::object();
    j["peer"] = peer;
    j["attempt"] = attempt_;
    j["lifetime"] = lifetime;
    ctx.log("discover_sent", std::move(j));
  }
}

void ProcessNode::on_discover_reply(NodeContext& ctx, Nonce nonce) {
  NodeId peer = discovering_.at(nonce);
  discovering_.erase(nonce);
  if (phase_ != Phase::Recovering || discovered_.contains(peer)) return;
  discovered_.insert(peer);
  ctx.log("discover_ok", Json{{"peer", peer}});
  if (std::all_of(peers_.begin(), peers_.end(), [&](const NodeId& p) { return discovered_.contains(p); })) {
    finish_discovery(ctx);
  }
}

void ProcessNode::on_discover_timeout(NodeContext& ctx, Nonce nonce) {
  discovering_.erase(nonce);
  if (phase_ != Phase::Recovering || !discovering_.empty()) return;
  const auto& rc = config_.recovery;
  ++attempt_;
  if (attempt_ < rc.discover_attempts) {
    discover_round(ctx);
    return;
  }
  Json missing = Json::array();
  for (const auto& p : peers_)
    if (!discovered_.contains(p)) missing.push_back(p);
  if (waits_ < rc.discover_max_waits) {
    ++waits_;
    ctx.log("discover_wait", Json{{"missing", missing}, {"wait", waits_}});
    ctx.set_timer(rc.discover_retry_period, kDiscoverTimer);
    return;
  }
  ctx.log("discover_gave_up", Json{{"missing", missing}});
  finish_discovery(ctx);
}

void ProcessNode::finish_discovery(NodeContext& ctx) {
  for (const auto& name : pending_) {
    messenger_.reissue(ctx, name);
    ctx.log("pending_reissued", Json{{"name", format_name(name)}});
  }
  pending_.clear();
  Json j = Json::object();
  j["epoch"] = restored_epoch_;
  j["discovered"] = std::vector<NodeId>(discovered_.begin(), discovered_.end());
  ctx.log("recovery_complete", std::move(j));
  phase_ = Phase::Running;
  messenger_.resume(ctx);
  if (!app_->started()) {
    start_app(ctx);
  } else if (app_->tick_interval() > 0 && !app_->finished()) {
    ctx.set_timer(app_->tick_interval(), kTickTimer);
  }
  consume(ctx);
}

}  // namespace ccncheck
