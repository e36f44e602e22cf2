#include "ccncheck/snapshot.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "ccncheck/errors.hpp"

namespace ccncheck {
namespace fs = std::filesystem;

namespace {

Json bytes_json(const Bytes& b) { return base64_encode(b); }

Bytes bytes_from(const Json& j) {
  auto b = base64_decode(j.get<std::string>());
  if (!b) throw Error("snapshot: invalid base64");
  return *b;
}

Json opt_name(const std::optional<StructuredName>& n) { return n ? Json(format_name(*n)) : Json(nullptr); }

std::optional<StructuredName> opt_name_from(const Json& j) {
  if (j.is_null()) return std::nullopt;
  return parse_name(j.get<std::string>());
}

Json entries_json(const std::vector<ChannelEntry>& entries) {
  Json a = Json::array();
  for (const auto& e : entries) {
    a.push_back({{"transfer", e.transfer}, {"seq", e.seq}, {"name", e.name}, {"tick", e.tick}, {"kind", e.kind}});
  }
  return a;
}

std::vector<ChannelEntry> entries_from(const Json& a) {
  std::vector<ChannelEntry> out;
  for (const auto& e : a) {
    out.push_back({e.at("transfer").get<TransferId>(), e.at("seq").get<std::uint64_t>(),
                   e.at("name").get<std::string>(), e.at("tick").get<Tick>(), e.at("kind").get<std::string>()});
  }
  return out;
}

TransferState state_from(const std::string& s) {
  for (auto st : {TransferState::Queued, TransferState::RtsSent, TransferState::CtsReceived,
                  TransferState::DataSent, TransferState::Delivered, TransferState::Failed}) {
    if (s == to_string(st)) return st;
  }
  throw Error("snapshot: unknown transfer state " + s);
}

Json transfer_json(const Transfer& t) {
  return {{"id", t.id},
          {"sender", t.sender},
          {"receiver", t.receiver},
          {"seq", t.seq},
          {"payload", bytes_json(t.payload)},
          {"state", to_string(t.state)},
          {"rts_name", format_name(t.rts_name)},
          {"cts_name", opt_name(t.cts_name)},
          {"control", t.control}};
}

Transfer transfer_from(const Json& j) {
  Transfer t;
  t.id = j.at("id").get<TransferId>();
  t.sender = j.at("sender").get<std::string>();
  t.receiver = j.at("receiver").get<std::string>();
  t.seq = j.at("seq").get<std::uint64_t>();
  t.payload = bytes_from(j.at("payload"));
  t.state = state_from(j.at("state").get<std::string>());
  t.rts_name = parse_name(j.at("rts_name").get<std::string>());
  t.cts_name = opt_name_from(j.at("cts_name"));
  t.control = j.at("control").get<bool>();
  return t;
}

void write_atomic(const fs::path& path, const std::string& text) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << text;
    if (!out.flush()) throw Error("cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::optional<Json> read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::stringstream ss;
  ss << in.rdbuf();
  return Json::parse(ss.str());
}

}  // namespace

std::vector<ChannelLog> LocalSnapshot::channel_logs() const {
  std::vector<ChannelLog> logs;
  for (const auto& [peer, o] : messaging.outbound) logs.push_back(o.log);
  for (const auto& [peer, i] : messaging.inbound) logs.push_back(i.log);
  return logs;
}

Json to_json(const LocalSnapshot& s) {
  Json j = Json::object();
  j["process"] = s.process;
  j["epoch"] = s.epoch;
  j["taken_at"] = s.taken_at;
  j["app_step"] = s.app_step;
  j["app_state"] = bytes_json(s.app_state);
  j["next_transfer"] = s.messaging.next_transfer;
  Json out = Json::array();
  for (const auto& [peer, o] : s.messaging.outbound) {
    Json awaiting = Json::array();
    for (const auto& t : o.awaiting) awaiting.push_back(transfer_json(t));
    out.push_back({{"peer", peer},
                   {"next_seq", o.next_seq},
                   {"last_interest_sent", opt_name(o.log.last_interest_sent)},
                   {"entries", entries_json(o.log.entries)},
                   {"awaiting", awaiting}});
  }
  j["outbound"] = out;
  Json in = Json::array();
  for (const auto& [peer, i] : s.messaging.inbound) {
    in.push_back({{"peer", peer},
                  {"rts_received", i.rts_received},
                  {"delivered_seq", i.delivered_seq},
                  {"last_interest_sent", opt_name(i.log.last_interest_sent)},
                  {"entries", entries_json(i.log.entries)}});
  }
  j["inbound"] = in;
  Json queued = Json::array();
  for (const auto& t : s.messaging.queued) queued.push_back(transfer_json(t));
  j["queued"] = queued;
  Json pending = Json::array();
  for (const auto& n : s.unanswered_interests) pending.push_back(format_name(n));
  j["unanswered_interests"] = pending;
  Json undelivered = Json::array();
  for (const auto& d : s.delivered_not_consumed) {
    undelivered.push_back({{"peer", d.peer},
                           {"transfer", d.transfer},
                           {"seq", d.seq},
                           {"payload", bytes_json(d.payload)},
                           {"control", d.control}});
  }
  j["delivered_not_consumed"] = undelivered;
  j["peers"] = s.peers;
  return j;
}

LocalSnapshot snapshot_from_json(const Json& j) {
  LocalSnapshot s;
  s.process = j.at("process").get<std::string>();
  s.epoch = j.at("epoch").get<std::uint64_t>();
  s.taken_at = j.at("taken_at").get<Tick>();
  s.app_step = j.at("app_step").get<std::uint64_t>();
  s.app_state = bytes_from(j.at("app_state"));
  s.messaging.next_transfer = j.at("next_transfer").get<std::uint64_t>();
  for (const auto& o : j.at("outbound")) {
    NodeId peer = o.at("peer").get<std::string>();
    auto& ch = s.messaging.outbound[peer];
    ch.log.peer = peer;
    ch.log.direction = Direction::Outbound;
    ch.log.entries = entries_from(o.at("entries"));
    ch.log.last_interest_sent = opt_name_from(o.at("last_interest_sent"));
    ch.next_seq = o.at("next_seq").get<std::uint64_t>();
    for (const auto& t : o.at("awaiting")) ch.awaiting.push_back(transfer_from(t));
  }
  for (const auto& i : j.at("inbound")) {
    NodeId peer = i.at("peer").get<std::string>();
    auto& ch = s.messaging.inbound[peer];
    ch.log.peer = peer;
    ch.log.direction = Direction::Inbound;
    ch.log.entries = entries_from(i.at("entries"));
    ch.log.last_interest_sent = opt_name_from(i.at("last_interest_sent"));
    ch.rts_received = i.at("rts_received").get<std::uint64_t>();
    ch.delivered_seq = i.at("delivered_seq").get<std::uint64_t>();
  }
  for (const auto& t : j.at("queued")) s.messaging.queued.push_back(transfer_from(t));
  for (const auto& n : j.at("unanswered_interests")) s.unanswered_interests.push_back(parse_name(n.get<std::string>()));
  for (const auto& d : j.at("delivered_not_consumed")) {
    s.delivered_not_consumed.push_back({d.at("peer").get<std::string>(), d.at("transfer").get<TransferId>(),
                                        d.at("seq").get<std::uint64_t>(), bytes_from(d.at("payload")),
                                        d.at("control").get<bool>()});
  }
  s.peers = j.at("peers").get<std::vector<NodeId>>();
  return s;
}

// ------------------------------------------------------------------- store

SnapshotStore::SnapshotStore(fs::path root) : root_(std::move(root)) {}

fs::path SnapshotStore::epoch_dir(std::uint64_t epoch) const { return root_ / std::to_string(epoch); }

void SnapshotStore::create_epoch(std::uint64_t epoch) const { fs::create_directories(epoch_dir(epoch)); }

void SnapshotStore::write_snapshot(const LocalSnapshot& s) const {
  create_epoch(s.epoch);
  write_atomic(epoch_dir(s.epoch) / (s.process + ".snap.json"), to_json(s).dump(2) + "\n");
}

std::optional<LocalSnapshot> SnapshotStore::read_snapshot(std::uint64_t epoch, const NodeId& process) const {
  auto j = read_json(epoch_dir(epoch) / (process + ".snap.json"));
  if (!j) return std::nullopt;
  return snapshot_from_json(*j);
}

void SnapshotStore::write_manifest(const Manifest& m) const {
  create_epoch(m.epoch);
  Json j = {{"epoch", m.epoch}, {"processes", m.processes}, {"committed", m.committed}};
  write_atomic(epoch_dir(m.epoch) / "MANIFEST.json", j.dump() + "\n");
}

std::optional<Manifest> SnapshotStore::read_manifest(std::uint64_t epoch) const {
  auto j = read_json(epoch_dir(epoch) / "MANIFEST.json");
  if (!j) return std::nullopt;
  return Manifest{j->at("epoch").get<std::uint64_t>(), j->at("processes").get<std::vector<NodeId>>(),
                  j->at("committed").get<bool>()};
}

std::vector<std::uint64_t> SnapshotStore::epochs() const {
  std::vector<std::uint64_t> out;
  if (!fs::is_directory(root_)) return out;
  for (const auto& entry : fs::directory_iterator(root_)) {
    if (!entry.is_directory()) continue;
    const auto name = entry.path().filename().string();
    if (name.empty() || !std::all_of(name.begin(), name.end(), [](char c) { return c >= '0' && c <= '9'; }))
      continue;
    out.push_back(std::stoull(name));
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::uint64_t SnapshotStore::max_epoch() const {
  auto all = epochs();
  return all.empty() ? 0 : all.back();
}

std::optional<std::uint64_t> SnapshotStore::latest_committed() const {
  auto all = epochs();
  for (auto it = all.rbegin(); it != all.rend(); ++it) {
    auto m = read_manifest(*it);
    if (m && m->committed) return *it;
  }
  return std::nullopt;
}

GlobalCheckpoint SnapshotStore::load(std::uint64_t epoch) const {
  GlobalCheckpoint g;
  g.epoch = epoch;
  if (auto m = read_manifest(epoch)) {
    g.committed = m->committed;
    g.processes = m->processes;
  }
  for (const auto& p : g.processes) {
    if (auto s = read_snapshot(epoch, p)) g.snapshots.emplace(p, std::move(*s));
  }
  return g;
}

}  // namespace ccncheck
