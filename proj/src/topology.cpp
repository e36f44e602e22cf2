#include "ccncheck/topology.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <random>
#include <set>

#include "ccncheck/errors.hpp"
#include "ccncheck/names.hpp"

namespace ccncheck {

void Topology::validate() const {
  std::set<NodeId> ids;
  for (const auto* group : {&nodes, &routers}) {
    for (const auto& id : *group) {
      if (!is_identifier(id)) throw Error("topology: '" + id + "' is not an identifier");
      if (!ids.insert(id).second) throw Error("topology: duplicate id '" + id + "'");
    }
  }
  if (ids.empty()) throw Error("topology: no endpoints");

  std::map<NodeId, std::vector<NodeId>> adj;
  for (const auto& l : links) {
    if (!ids.contains(l.a) || !ids.contains(l.b))
      throw Error("topology: link references unknown endpoint " + l.a + "-" + l.b);
    if (l.a == l.b) throw Error("topology: self link on " + l.a);
    if (l.latency < 1) throw Error("topology: link latency must be >= 1 tick");
    adj[l.a].push_back(l.b);
    adj[l.b].push_back(l.a);
  }

  std::set<NodeId> seen{*ids.begin()};
  std::vector<NodeId> stack{*ids.begin()};
  while (!stack.empty()) {
    auto cur = stack.back();
    stack.pop_back();
    for (const auto& next : adj[cur]) {
      if (seen.insert(next).second) stack.push_back(next);
    }
  }
  if (seen.size() != ids.size()) throw Error("topology: graph is not connected");
}

bool Topology::contains(const NodeId& id) const {
  return std::find(nodes.begin(), nodes.end(), id) != nodes.end() ||
         std::find(routers.begin(), routers.end(), id) != routers.end();
}

Json Topology::to_json() const {
  Json j = Json::object();
  j["nodes"] = nodes;
  j["routers"] = routers;
  Json ls = Json::array();
  for (const auto& l : links) ls.push_back(Json::array({l.a, l.b, l.latency}));
  j["links"] = ls;
  j["seed"] = seed;
  return j;
}

Topology Topology::from_json(const Json& j) {
  Topology t;
  try {
    t.nodes = j.at("nodes").get<std::vector<NodeId>>();
    if (j.contains("routers")) t.routers = j.at("routers").get<std::vector<NodeId>>();
    for (const auto& l : j.at("links")) {
      if (!l.is_array() || l.size() != 3) throw Error("topology: link must be [a, b, latency]");
      t.links.push_back({l[0].get<NodeId>(), l[1].get<NodeId>(), l[2].get<Tick>()});
    }
    if (j.contains("seed")) t.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("topology: ") + e.what());
  }
  t.validate();
  return t;
}

Topology Topology::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot read topology " + path.string());
  try {
    return from_json(Json::parse(is));
  } catch (const nlohmann::json::exception& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

Topology Topology::star(const std::vector<NodeId>& hosts, std::uint64_t seed, Tick min_latency,
                        Tick max_latency) {
  Topology t;
  t.nodes = hosts;
  t.routers = {"r0"};
  t.seed = seed;
  std::mt19937_64 rng(seed);
  // modulo mapping keeps topologies identical across standard libraries
  const Tick span = max_latency - min_latency + 1;
  for (const auto& h : hosts) t.links.push_back({h, "r0", min_latency + rng() % span});
  t.validate();
  return t;
}

Topology Topology::line(const std::vector<NodeId>& chain, Tick latency) {
  Topology t;
  for (std::size_t i = 0; i < chain.size(); ++i) {
    // odd positions are routers: a - r - b - r - c
    (i % 2 == 1 ? t.routers : t.nodes).push_back(chain[i]);
    if (i > 0) t.links.push_back({chain[i - 1], chain[i], latency});
  }
  t.validate();
  return t;
}

}  // namespace ccncheck
