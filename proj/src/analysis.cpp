#include "ccncheck/analysis.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "ccncheck/apps.hpp"

namespace ccncheck {
namespace {

bool app_event(const TraceEvent& e, std::string_view ev) { return e.ev == ev && !e.flag("control"); }

std::string at(const TraceEvent& e) { return " [t=" + std::to_string(e.t) + " seq=" + std::to_string(e.seq) + "]"; }

}  // namespace

CheckReport check_handshakes(const Trace& trace, bool exactly_once) {
  CheckReport r{"rts_cts_data_shape", 0, {}};
  const auto& ev = trace.events();
  std::map<std::pair<NodeId, TransferId>, std::vector<std::size_t>> rts, sent;
  std::map<Nonce, std::size_t> rts_by_nonce;
  std::map<std::pair<NodeId, Nonce>, std::size_t> cts_by_nonce, recv_by_nonce;
  std::map<TransferId, std::size_t> delivered;
  for (std::size_t i = 0; i < ev.size(); ++i) {
    const auto& e = ev[i];
    if (app_event(e, "rts_issued")) {
      rts[{e.node, e.num("transfer")}].push_back(i);
      rts_by_nonce[e.num("nonce")] = i;
    } else if (app_event(e, "payload_sent")) {
      sent[{e.node, e.num("transfer")}].push_back(i);
    } else if (app_event(e, "cts_issued")) {
      cts_by_nonce[{e.node, e.num("nonce")}] = i;
    } else if (e.ev == "interest_recv" && e.flag("app")) {
      recv_by_nonce[{e.node, e.num("nonce")}] = i;
    }
  }
  auto latest_before = [](const std::vector<std::size_t>& v, std::size_t limit) -> std::optional<std::size_t> {
    std::optional<std::size_t> best;
    for (auto i : v)
      if (i < limit) best = i;
    return best;
  };

  for (std::size_t i = 0; i < ev.size(); ++i) {
    const auto& e = ev[i];
    if (!app_event(e, "payload_delivered")) continue;
    ++r.checked;
    const NodeId receiver = e.node;
    const NodeId sender = e.str("peer");
    const TransferId id = e.num("transfer");
    ++delivered[id];
    auto fail = [&](const std::string& what) {
      r.violations.push_back("transfer " + std::to_string(id) + " " + sender + "->" + receiver + ": " + what + at(e));
    };
    auto s_it = sent.find({sender, id});
    auto s = s_it == sent.end() ? std::nullopt : latest_before(s_it->second, i);
    if (!s) {
      fail("delivered without payload_sent");
      continue;
    }
    auto cts = cts_by_nonce.find({receiver, ev[*s].num("nonce")});
    if (cts == cts_by_nonce.end() || cts->second > *s) {
      fail("payload not answering a CTS from the receiver");
      continue;
    }
    auto r_it = rts.find({sender, id});
    auto rt = r_it == rts.end() ? std::nullopt : latest_before(r_it->second, cts->second);
    if (!rt) {
      fail("CTS precedes every RTS of the transfer");
      continue;
    }
    auto got = recv_by_nonce.find({receiver, ev[*rt].num("nonce")});
    if (got == recv_by_nonce.end() || got->second > cts->second) {
      fail("CTS issued before the RTS reached the receiver");
      continue;
    }
    if (ev[*rt].t > ev[cts->second].t || ev[cts->second].t > ev[*s].t || ev[*s].t > e.t) fail("ticks out of order");
    if (exactly_once) {
      if (r_it->second.size() != 1) fail(std::to_string(r_it->second.size()) + " RTS issued");
      if (s_it->second.size() != 1) fail(std::to_string(s_it->second.size()) + " payloads sent");
    }
  }
  if (exactly_once) {
    for (const auto& [id, n] : delivered)
      if (n != 1) r.violations.push_back("transfer " + std::to_string(id) + " delivered " + std::to_string(n) + " times");
  }
  return r;
}

CheckReport check_fifo(const Trace& trace) {
  CheckReport r{"fifo", 0, {}};
  std::map<TransferId, std::uint64_t> seq_of;
  std::map<std::pair<NodeId, NodeId>, std::optional<std::uint64_t>> last;  // (receiver, sender)
  for (const auto& e : trace.events()) {
    if (app_event(e, "rts_issued")) seq_of[e.num("transfer")] = e.num("chan_seq");
    if (e.ev == "restore" || e.ev == "crash") {
      for (auto& [key, v] : last)
        if (key.first == e.node) v.reset();
    }
    if (!app_event(e, "payload_delivered")) continue;
    ++r.checked;
    const std::pair<NodeId, NodeId> key{e.node, e.str("peer")};
    auto seq = e.num("chan_seq");
    auto it = seq_of.find(e.num("transfer"));
    if (it == seq_of.end() || it->second != seq) {
      r.violations.push_back("transfer " + std::to_string(e.num("transfer")) + " delivered with seq " +
                             std::to_string(seq) + " not matching its RTS" + at(e));
    }
    auto& prev = last[key];
    if (prev && seq != *prev + 1) {
      r.violations.push_back(key.second + "->" + key.first + ": seq " + std::to_string(seq) + " after " +
                             std::to_string(*prev) + at(e));
    }
    prev = seq;
  }
  return r;
}

CheckReport check_blocking(const Trace& trace) {
  CheckReport r{"blocking", 0, {}};
  std::set<NodeId> suspended;
  for (const auto& e : trace.events()) {
    if (e.ev == "suspend") {
      suspended.insert(e.node);
      ++r.checked;
    } else if (e.ev == "resume" || e.ev == "crash") {
      suspended.erase(e.node);
    } else if (app_event(e, "rts_issued") && suspended.contains(e.node)) {
      r.violations.push_back(e.node + " issued an application RTS while suspended" + at(e));
    }
  }
  return r;
}

OutputProjection project_outputs(const Trace& trace) {
  OutputProjection p;
  std::map<NodeId, std::map<std::uint64_t, std::string>> seen;
  for (const auto& e : trace.events()) {
    if (e.ev != "app_output") continue;
    auto step = e.num("step");
    auto value = e.str("value");
    auto [it, fresh] = seen[e.node].emplace(step, value);
    if (fresh) {
      p.outputs[e.node].push_back({step, value});
    } else if (it->second != value) {
      p.conflicts.push_back(e.node + " step " + std::to_string(step) + " replayed as " + value + " (was " +
                            it->second + ")" + at(e));
    }
  }
  return p;
}

EquivalenceReport check_output_equivalence(const Trace& reference, const Trace& faulty) {
  EquivalenceReport rep;
  auto ref = project_outputs(reference);
  auto got = project_outputs(faulty);
  if (!got.conflicts.empty()) {
    rep.equal = false;
    rep.first_divergence = got.conflicts.front();
    return rep;
  }
  std::set<NodeId> nodes;
  for (const auto& [n, v] : ref.outputs) nodes.insert(n);
  for (const auto& [n, v] : got.outputs) nodes.insert(n);
  for (const auto& n : nodes) {
    const auto& a = ref.outputs[n];
    const auto& b = got.outputs[n];
    for (std::size_t i = 0; i < std::max(a.size(), b.size()); ++i) {
      auto show = [](const std::vector<OutputRecord>& v, std::size_t k) {
        return k < v.size() ? "step " + std::to_string(v[k].step) + " = " + v[k].value : std::string("nothing");
      };
      if (i >= a.size() || i >= b.size() || !(a[i] == b[i])) {
        rep.equal = false;
        rep.first_divergence =
            n + " output #" + std::to_string(i) + ": expected " + show(a, i) + ", got " + show(b, i);
        return rep;
      }
    }
  }
  return rep;
}

CheckReport check_fibonacci(const Trace& trace, std::uint64_t n, std::uint64_t first) {
  CheckReport r{"fibonacci_outputs", 0, {}};
  auto p = project_outputs(trace);
  for (const auto& c : p.conflicts) r.violations.push_back(c);
  std::map<std::uint64_t, std::string> by_step;
  for (const auto& [node, outs] : p.outputs) {
    for (const auto& o : outs) {
      if (!by_step.emplace(o.step, o.value).second)
        r.violations.push_back("step " + std::to_string(o.step) + " output by more than one node");
    }
  }
  BigInt a = 0, b = 1;  // F(0), F(1)
  for (std::uint64_t k = 1; k <= n; ++k) {
    if (k < first) {
      if (by_step.contains(k)) r.violations.push_back("unexpected F(" + std::to_string(k) + ") before the resume point");
      BigInt next = a + b;
      a = b;
      b = next;
      continue;
    }
    ++r.checked;
    auto it = by_step.find(k);
    if (it == by_step.end()) {
      r.violations.push_back("missing F(" + std::to_string(k) + ")");
    } else if (it->second != b.str()) {
      r.violations.push_back("F(" + std::to_string(k) + ") = " + it->second + ", expected " + b.str());
    }
    BigInt next = a + b;
    a = b;
    b = next;
  }
  if (!by_step.empty() && by_step.rbegin()->first > n)
    r.violations.push_back("outputs beyond F(" + std::to_string(n) + ")");
  return r;
}

CheckReport check_counter(const Trace& trace, std::uint64_t steps) {
  CheckReport r{"counter_consistency", 0, {}};
  auto p = project_outputs(trace);
  for (const auto& c : p.conflicts) r.violations.push_back(c);
  for (const auto& [node, outs] : p.outputs) {
    for (std::size_t i = 0; i < outs.size(); ++i) {
      ++r.checked;
      if (outs[i].step != i + 1 || outs[i].value != std::to_string(i + 1)) {
        r.violations.push_back(node + " output #" + std::to_string(i) + " is step " + std::to_string(outs[i].step) +
                               " = " + outs[i].value);
        break;
      }
    }
    if (outs.size() != steps)
      r.violations.push_back(node + " produced " + std::to_string(outs.size()) + " distinct values");
  }
  // after each restore the next output continues from the restored value
  std::map<NodeId, std::uint64_t> expect;
  for (const auto& e : trace.events()) {
    if (e.ev == "restore") {
      if (e.num("app_step") < steps) expect[e.node] = e.num("app_step") + 1;
    } else if (e.ev == "crash") {
      expect.erase(e.node);
    } else if (e.ev == "app_output") {
      auto it = expect.find(e.node);
      if (it == expect.end()) continue;
      ++r.checked;
      if (e.num("step") != it->second) {
        r.violations.push_back(e.node + " resumed at " + std::to_string(e.num("step")) + ", expected " +
                               std::to_string(it->second) + at(e));
      }
      expect.erase(it);
    }
  }
  return r;
}

std::vector<ConsistencyReport> verify_store(const SnapshotStore& store, const Trace& trace) {
  std::vector<ConsistencyReport> out;
  for (auto epoch : store.epochs()) {
    auto g = store.load(epoch);
    if (g.committed) out.push_back(verify_consistency(g, trace));
  }
  return out;
}

std::vector<CheckReport> verify_run(const Trace& trace, const SnapshotStore& store) {
  std::vector<CheckReport> out;
  out.push_back(check_handshakes(trace, false));
  out.push_back(check_fifo(trace));
  out.push_back(check_blocking(trace));
  std::size_t outputs = 0;
  for (const auto& e : trace.events()) outputs += e.ev == "app_output";
  CheckReport dedup{"output_replay", outputs, project_outputs(trace).conflicts};
  out.push_back(dedup);
  CheckReport cut{"consistent_cut", 0, {}};
  for (const auto& rep : verify_store(store, trace)) {
    ++cut.checked;
    if (!rep.ok()) {
      cut.violations.push_back("epoch " + std::to_string(rep.epoch) + ":");
      for (const auto& d : rep.details) cut.violations.push_back("  " + d);
    }
  }
  out.push_back(cut);
  return out;
}

}  // namespace ccncheck
