#include "ccncheck/trace.hpp"

#include <fstream>
#include <sstream>

#include "ccncheck/errors.hpp"

namespace ccncheck {

std::string TraceEvent::to_json_line() const {
  Json j = Json::object();
  j["t"] = t;
  j["seq"] = seq;
  j["ev"] = ev;
  if (!node.empty()) j["node"] = node;
  for (const auto& [key, value] : fields.items()) j[key] = value;
  return j.dump();
}

TraceEvent TraceEvent::from_json(const Json& j) {
  TraceEvent e;
  e.t = j.at("t").get<Tick>();
  e.seq = j.at("seq").get<std::uint64_t>();
  e.ev = j.at("ev").get<std::string>();
  if (j.contains("node")) e.node = j.at("node").get<std::string>();
  for (const auto& [key, value] : j.items()) {
    if (key != "t" && key != "seq" && key != "ev" && key != "node") e.fields[key] = value;
  }
  return e;
}

std::string TraceEvent::str(std::string_view key) const {
  auto it = fields.find(std::string(key));
  if (it == fields.end() || !it->is_string()) return {};
  return it->get<std::string>();
}

std::uint64_t TraceEvent::num(std::string_view key, std::uint64_t fallback) const {
  auto it = fields.find(std::string(key));
  if (it == fields.end() || !it->is_number()) return fallback;
  return it->get<std::uint64_t>();
}

bool TraceEvent::flag(std::string_view key) const {
  auto it = fields.find(std::string(key));
  return it != fields.end() && it->is_boolean() && it->get<bool>();
}

bool TraceEvent::has(std::string_view key) const { return fields.contains(std::string(key)); }

const TraceEvent& Trace::append(Tick t, std::string ev, std::string node, Json fields) {
  if (!events_.empty() && t < events_.back().t)
    throw Error("trace append out of time order: " + ev);
  TraceEvent e{t, events_.size(), std::move(ev), std::move(node), std::move(fields)};
  events_.push_back(std::move(e));
  return events_.back();
}

std::string Trace::to_jsonl() const {
  std::string out;
  for (const auto& e : events_) {
    out += e.to_json_line();
    out += '\n';
  }
  return out;
}

void Trace::write_jsonl(const std::filesystem::path& path) const {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot write trace " + path.string());
  os << to_jsonl();
}

Trace Trace::from_jsonl(std::string_view text) {
  Trace trace;
  std::istringstream is{std::string(text)};
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    trace.events_.push_back(TraceEvent::from_json(Json::parse(line)));
  }
  return trace;
}

Trace Trace::read_jsonl(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot read trace " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return from_jsonl(ss.str());
}

}  // namespace ccncheck
