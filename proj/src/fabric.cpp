#include "ccncheck/fabric.hpp"

#include <algorithm>
#include <limits>

#include "ccncheck/errors.hpp"

namespace ccncheck {
namespace {

Json name_fields(const StructuredName& name, Nonce nonce) {
  Json j = Json::object();
  j["name"] = format_name(name);
  j["nonce"] = nonce;
  return j;
}

}  // namespace

// ---------------------------------------------------------------- NodeContext

const NodeId& NodeContext::self() const { return fabric_->endpoints_[endpoint_].id; }

Tick NodeContext::now() const { return fabric_->now_; }

Nonce NodeContext::express(const StructuredName& name, std::optional<Tick> lifetime) {
  return fabric_->express_at(endpoint_, name, lifetime);
}

void NodeContext::satisfy(const Interest& received, Bytes payload) {
  fabric_->satisfy_at(endpoint_, received, std::move(payload));
}

bool NodeContext::can_satisfy(Nonce received) const {
  const auto& e = fabric_->endpoints_[endpoint_];
  return std::any_of(e.received.begin(), e.received.end(),
                     [&](const Interest& i) { return i.nonce == received; });
}

void NodeContext::set_timer(Tick delay, std::uint64_t tag) {
  fabric_->set_timer(self(), delay, tag);
}

void NodeContext::register_prefix(const std::string& prefix) {
  fabric_->register_prefix(self(), prefix);
}

void NodeContext::log(std::string ev, Json fields) {
  fabric_->log(endpoint_, std::move(ev), std::move(fields));
}

// --------------------------------------------------------------------- Fabric

Fabric::Fabric(Topology topology, FabricConfig config)
    : topology_(std::move(topology)), config_(config) {
  topology_.validate();
  for (const auto& id : topology_.nodes) {
    by_id_[id] = endpoints_.size();
    endpoints_.emplace_back().id = id;
  }
  for (const auto& id : topology_.routers) {
    by_id_[id] = endpoints_.size();
    auto& e = endpoints_.emplace_back();
    e.id = id;
    e.router = true;
  }
  for (const auto& link : topology_.links) {
    auto a = by_id_.at(link.a);
    auto b = by_id_.at(link.b);
    auto face_a = static_cast<FaceId>(endpoints_[a].faces.size() + 1);
    auto face_b = static_cast<FaceId>(endpoints_[b].faces.size() + 1);
    endpoints_[a].faces.push_back({b, face_b, link.latency});
    endpoints_[b].faces.push_back({a, face_a, link.latency});
  }
}

std::size_t Fabric::index_of(const NodeId& node) const {
  auto it = by_id_.find(node);
  if (it == by_id_.end()) throw Error("unknown endpoint '" + node + "'");
  return it->second;
}

Fabric::Endpoint& Fabric::host(const NodeId& node) { return endpoints_[index_of(node)]; }

const Fabric::Endpoint& Fabric::host(const NodeId& node) const {
  return endpoints_[index_of(node)];
}

void Fabric::attach(const NodeId& node, NodeAgent* agent) {
  auto& e = host(node);
  if (e.router) throw Error("cannot attach an agent to router '" + node + "'");
  e.agent = agent;
}

NodeContext Fabric::context(const NodeId& node) { return NodeContext(*this, index_of(node)); }

void Fabric::log(std::size_t idx, std::string ev, Json fields) {
  trace_.append(now_, std::move(ev), endpoints_[idx].id, std::move(fields));
}

void Fabric::push(Tick t, decltype(Event::body) body) {
  queue_.push(Event{t, next_seq_++, std::move(body)});
}

// -------------------------------------------------------------------- routing

void Fabric::register_prefix(const NodeId& node, const std::string& prefix) {
  auto idx = index_of(node);
  auto& e = endpoints_[idx];
  if (!e.up) throw NodeDown("register_prefix: '" + node + "' is down");
  auto parts = name_components(prefix);
  if (!prefix.starts_with('/') || parts.empty() ||
      !std::all_of(parts.begin(), parts.end(), [](const auto& p) { return is_identifier(p); }))
    throw MalformedName("app", "bad prefix '" + prefix + "'");

  auto it = registry_.find(prefix);
  if (it != registry_.end()) {
    if (it->second == idx) return;
    throw PrefixConflict("prefix " + prefix + " already held by " + endpoints_[it->second].id);
  }
  registry_[prefix] = idx;
  recompute_routes();
  for (std::size_t i = 0; i < endpoints_.size(); ++i) {
    auto f = endpoints_[i].fib.find(prefix);
    if (f == endpoints_[i].fib.end()) continue;
    Json j = Json::object();
    j["prefix"] = prefix;
    j["next"] = f->second == kAppFace ? std::string("app") : face_peer(endpoints_[i], f->second);
    log(i, "fib_add", std::move(j));
  }
}

void Fabric::recompute_routes() {
  constexpr Tick kInf = std::numeric_limits<Tick>::max();
  for (auto& e : endpoints_) e.fib.clear();
  for (const auto& [prefix, owner] : registry_) {
    if (!endpoints_[owner].up) continue;
    std::vector<Tick> dist(endpoints_.size(), kInf);
    std::vector<bool> done(endpoints_.size(), false);
    dist[owner] = 0;
    for (std::size_t round = 0; round < endpoints_.size(); ++round) {
      std::size_t best = endpoints_.size();
      for (std::size_t i = 0; i < endpoints_.size(); ++i) {
        if (!done[i] && endpoints_[i].up && dist[i] != kInf &&
            (best == endpoints_.size() || dist[i] < dist[best]))
          best = i;
      }
      if (best == endpoints_.size()) break;
      done[best] = true;
      for (const auto& f : endpoints_[best].faces) {
        if (endpoints_[f.neighbor].up && dist[best] + f.latency < dist[f.neighbor])
          dist[f.neighbor] = dist[best] + f.latency;
      }
    }
    endpoints_[owner].fib[prefix] = kAppFace;
    for (std::size_t i = 0; i < endpoints_.size(); ++i) {
      if (i == owner || !endpoints_[i].up || dist[i] == kInf) continue;
      // next hop: neighbour on a shortest path, ties broken by lower distance
      // to the owner and then by endpoint order
      std::optional<std::size_t> chosen;
      for (std::size_t k = 0; k < endpoints_[i].faces.size(); ++k) {
        const auto& f = endpoints_[i].faces[k];
        if (!endpoints_[f.neighbor].up || dist[f.neighbor] == kInf) continue;
        if (dist[f.neighbor] + f.latency != dist[i]) continue;
        if (!chosen) {
          chosen = k;
          continue;
        }
        const auto& cur = endpoints_[i].faces[*chosen];
        if (std::tie(dist[f.neighbor], f.neighbor) < std::tie(dist[cur.neighbor], cur.neighbor))
          chosen = k;
      }
      if (chosen) endpoints_[i].fib[prefix] = static_cast<FaceId>(*chosen + 1);
    }
  }
}

std::optional<FaceId> Fabric::lookup(const Endpoint& e, const std::string& uri) const {
  auto parts = name_components(uri);
  for (std::size_t len = parts.size(); len > 0; --len) {
    std::string prefix;
    for (std::size_t i = 0; i < len; ++i) prefix.append("/").append(parts[i]);
    auto it = e.fib.find(prefix);
    if (it != e.fib.end()) return it->second;
  }
  return std::nullopt;
}

const NodeId& Fabric::face_peer(const Endpoint& e, FaceId face) const {
  return endpoints_[e.faces.at(face - 1).neighbor].id;
}

std::optional<NodeId> Fabric::prefix_owner(const std::string& prefix) const {
  auto it = registry_.find(prefix);
  if (it == registry_.end()) return std::nullopt;
  return endpoints_[it->second].id;
}

// -------------------------------------------------------------------- packets

Nonce Fabric::express_interest(const NodeId& node, const StructuredName& name,
                               std::optional<Tick> lifetime) {
  return express_at(index_of(node), name, lifetime);
}

Nonce Fabric::express_at(std::size_t idx, const StructuredName& name,
                         std::optional<Tick> lifetime) {
  auto& e = endpoints_[idx];
  if (!e.up) throw NodeDown("express_interest: '" + e.id + "' is down");
  std::string uri = format_name(name);
  auto out = lookup(e, uri);
  if (out && *out == kAppFace) throw ProtocolViolation("interest addressed to own prefix: " + uri);

  Nonce nonce = (static_cast<Nonce>(idx + 1) << 48) |
                (static_cast<Nonce>(e.incarnation & 0xFFFF) << 32) | ++e.nonce_counter;
  Interest interest{name, nonce, now_, lifetime.value_or(config_.interest_lifetime)};
  e.pit[nonce] = PitEntry{interest, kAppFace, now_};
  e.handles[nonce] = HandleState::Pending;
  log(idx, "pit_add", name_fields(name, nonce));
  push(now_ + interest.lifetime, Expiry{idx, e.incarnation, nonce});
  if (!out) {
    Json j = name_fields(name, nonce);
    j["reason"] = "no_route";
    log(idx, "interest_dropped", std::move(j));
    return nonce;
  }
  transmit(idx, *out, std::move(interest));
  return nonce;
}

void Fabric::transmit(std::size_t from, FaceId face, std::variant<Interest, Data> packet) {
  const auto& e = endpoints_[from];
  const auto& f = e.faces.at(face - 1);
  bool is_interest = std::holds_alternative<Interest>(packet);
  const auto& name = is_interest ? std::get<Interest>(packet).name : std::get<Data>(packet).name;
  Nonce nonce = is_interest ? std::get<Interest>(packet).nonce : std::get<Data>(packet).nonce;
  Json j = name_fields(name, nonce);
  j["to"] = endpoints_[f.neighbor].id;
  log(from, is_interest ? "interest_sent" : "data_sent", std::move(j));
  push(now_ + f.latency,
       Arrival{f.neighbor, f.remote_face, endpoints_[f.neighbor].incarnation, std::move(packet)});
}

void Fabric::on_interest_arrival(std::size_t idx, FaceId face, Interest interest) {
  auto& e = endpoints_[idx];
  if (e.pit.contains(interest.nonce)) {
    Json j = name_fields(interest.name, interest.nonce);
    j["reason"] = "loop";
    log(idx, "interest_dropped", std::move(j));
    return;
  }
  std::string uri = format_name(interest.name);
  auto out = lookup(e, uri);
  Json recv = name_fields(interest.name, interest.nonce);
  recv["from"] = face_peer(e, face);
  recv["app"] = out && *out == kAppFace;
  log(idx, "interest_recv", std::move(recv));
  if (!out) {
    Json j = name_fields(interest.name, interest.nonce);
    j["reason"] = "no_route";
    log(idx, "interest_dropped", std::move(j));
    return;
  }
  e.pit[interest.nonce] = PitEntry{interest, face, now_};
  log(idx, "pit_add", name_fields(interest.name, interest.nonce));
  push(now_ + interest.lifetime, Expiry{idx, e.incarnation, interest.nonce});
  if (*out == kAppFace) {
    e.received.push_back(interest);
    if (e.agent) {
      NodeContext ctx(*this, idx);
      e.agent->on_interest(ctx, interest);
    }
    return;
  }
  transmit(idx, *out, std::move(interest));
}

void Fabric::on_data_arrival(std::size_t idx, FaceId face, Data data) {
  auto& e = endpoints_[idx];
  auto it = e.pit.find(data.nonce);
  if (it == e.pit.end() || !(it->second.interest.name == data.name)) {
    ++data_drops_;
    Json j = name_fields(data.name, data.nonce);
    j["reason"] = "no_pit";
    log(idx, "data_dropped", std::move(j));
    return;
  }
  FaceId back = it->second.in_face;
  Json recv = name_fields(data.name, data.nonce);
  recv["from"] = face_peer(e, face);
  recv["app"] = back == kAppFace;
  log(idx, "data_recv", std::move(recv));
  log(idx, "pit_consume", name_fields(data.name, data.nonce));
  e.pit.erase(it);
  if (back == kAppFace) {
    e.handles[data.nonce] = HandleState::Satisfied;
    if (e.agent) {
      NodeContext ctx(*this, idx);
      e.agent->on_data(ctx, data);
    }
    return;
  }
  transmit(idx, back, std::move(data));
}

void Fabric::satisfy_interest(const NodeId& node, const StructuredName& name, Bytes payload) {
  const auto& e = host(node);
  auto it = std::find_if(e.received.begin(), e.received.end(),
                         [&](const Interest& i) { return i.name == name; });
  if (it == e.received.end())
    throw ProtocolViolation("satisfy_interest: " + node + " holds no unsatisfied " +
                            format_name(name));
  Interest received = *it;
  satisfy_at(index_of(node), received, std::move(payload));
}

void Fabric::satisfy_interest(const NodeId& node, const Interest& received, Bytes payload) {
  satisfy_at(index_of(node), received, std::move(payload));
}

void Fabric::satisfy_at(std::size_t idx, const Interest& received, Bytes payload) {
  auto& e = endpoints_[idx];
  if (!e.up) throw NodeDown("satisfy_interest: '" + e.id + "' is down");
  auto it = std::find_if(e.received.begin(), e.received.end(),
                         [&](const Interest& i) { return i.nonce == received.nonce; });
  auto pit = e.pit.find(received.nonce);
  if (it == e.received.end() || pit == e.pit.end())
    throw ProtocolViolation("satisfy_interest: " + e.id + " holds no unsatisfied " +
                            format_name(received.name));
  e.received.erase(it);
  FaceId back = pit->second.in_face;
  Data data{pit->second.interest.name, std::move(payload), e.id, received.nonce};
  log(idx, "pit_consume", name_fields(data.name, data.nonce));
  e.pit.erase(pit);
  transmit(idx, back, std::move(data));
}

bool Fabric::has_received(const NodeId& node, Nonce nonce) const {
  const auto& e = host(node);
  return std::any_of(e.received.begin(), e.received.end(),
                     [&](const Interest& i) { return i.nonce == nonce; });
}

HandleState Fabric::handle_status(const NodeId& node, Nonce nonce) const {
  const auto& e = host(node);
  auto it = e.handles.find(nonce);
  return it == e.handles.end() ? HandleState::Unknown : it->second;
}

void Fabric::on_expiry(const Expiry& ex) {
  auto& e = endpoints_[ex.at];
  if (!e.up || e.incarnation != ex.incarnation) return;
  auto it = e.pit.find(ex.nonce);
  if (it == e.pit.end()) return;
  PitEntry entry = std::move(it->second);
  e.pit.erase(it);
  if (entry.in_face == kAppFace) {
    e.handles[ex.nonce] = HandleState::Expired;
    log(ex.at, "interest_expired", name_fields(entry.interest.name, ex.nonce));
    if (e.agent) {
      NodeContext ctx(*this, ex.at);
      e.agent->on_timeout(ctx, entry.interest);
    }
    return;
  }
  std::erase_if(e.received, [&](const Interest& i) { return i.nonce == ex.nonce; });
  log(ex.at, "pit_expire", name_fields(entry.interest.name, ex.nonce));
}

// ------------------------------------------------------------------ liveness

void Fabric::crash_node(const NodeId& node) {
  auto idx = index_of(node);
  auto& e = endpoints_[idx];
  if (!e.up) return;
  e.up = false;
  ++e.incarnation;
  e.pit.clear();
  e.received.clear();
  e.handles.clear();
  std::erase_if(registry_, [&](const auto& kv) { return kv.second == idx; });
  recompute_routes();
  if (e.agent) e.agent->on_crash();
  log(idx, "crash", Json::object());
}

void Fabric::restart_node(const NodeId& node) {
  auto idx = index_of(node);
  auto& e = endpoints_[idx];
  if (e.up) throw Error("restart_node: '" + node + "' is not crashed");
  e.up = true;
  recompute_routes();
  log(idx, "restart", Json::object());
}

bool Fabric::alive(const NodeId& node) const { return host(node).up; }

// ---------------------------------------------------------------- event loop

void Fabric::set_timer(const NodeId& node, Tick delay, std::uint64_t tag) {
  auto idx = index_of(node);
  push(now_ + delay, Timer{idx, endpoints_[idx].incarnation, tag});
}

void Fabric::schedule(Tick at, std::function<void()> action) {
  push(std::max(at, now_), Driver{std::move(action)});
}

void Fabric::step() {
  Event ev = queue_.top();
  queue_.pop();
  now_ = ev.t;
  std::visit(
      [&](auto& body) {
        using T = std::decay_t<decltype(body)>;
        if constexpr (std::is_same_v<T, Arrival>) {
          auto& e = endpoints_[body.to];
          if (!e.up || e.incarnation != body.to_incarnation) {
            bool interest = std::holds_alternative<Interest>(body.packet);
            const auto& name = interest ? std::get<Interest>(body.packet).name
                                        : std::get<Data>(body.packet).name;
            Nonce nonce = interest ? std::get<Interest>(body.packet).nonce
                                   : std::get<Data>(body.packet).nonce;
            if (!interest) ++data_drops_;
            Json j = name_fields(name, nonce);
            j["reason"] = "node_down";
            log(body.to, interest ? "interest_dropped" : "data_dropped", std::move(j));
            return;
          }
          if (auto* interest = std::get_if<Interest>(&body.packet)) {
            on_interest_arrival(body.to, body.face, std::move(*interest));
          } else {
            on_data_arrival(body.to, body.face, std::move(std::get<Data>(body.packet)));
          }
        } else if constexpr (std::is_same_v<T, Timer>) {
          auto& e = endpoints_[body.node];
          if (e.up && e.incarnation == body.incarnation && e.agent) {
            NodeContext ctx(*this, body.node);
            e.agent->on_timer(ctx, body.tag);
          }
        } else if constexpr (std::is_same_v<T, Expiry>) {
          on_expiry(body);
        } else {
          body.action();
        }
      },
      ev.body);
}

std::span<const TraceEvent> Fabric::run_until(Tick t) {
  std::size_t begin = trace_.size();
  while (!queue_.empty() && queue_.top().t <= t) step();
  now_ = std::max(now_, t);
  return std::span<const TraceEvent>(trace_.events()).subspan(begin);
}

std::span<const TraceEvent> Fabric::run_until_quiescent() {
  std::size_t begin = trace_.size();
  std::uint64_t processed = 0;
  while (!queue_.empty()) {
    if (++processed > config_.max_events) throw Error("run_until_quiescent: event budget exceeded");
    step();
  }
  return std::span<const TraceEvent>(trace_.events()).subspan(begin);
}

std::vector<PitEntry> Fabric::pit(const NodeId& node) const {
  std::vector<PitEntry> out;
  for (const auto& [nonce, entry] : host(node).pit) out.push_back(entry);
  return out;
}

std::vector<FibEntry> Fabric::fib(const NodeId& node) const {
  std::vector<FibEntry> out;
  for (const auto& [prefix, face] : host(node).fib) out.push_back({prefix, face});
  return out;
}

}  // namespace ccncheck
