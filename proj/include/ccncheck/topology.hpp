#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ccncheck/trace.hpp"

namespace ccncheck {

using NodeId = std::string;

struct Link {
  NodeId a;
  NodeId b;
  Tick latency = 1;

  friend bool operator==(const Link&, const Link&) = default;
};

/// Hosts ("nodes") run processes; routers only forward. Both kinds keep a
/// FIB and a PIT.
struct Topology {
  std::vector<NodeId> nodes;
  std::vector<NodeId> routers;
  std::vector<Link> links;
  std::uint64_t seed = 0;

  /// Throws Error on duplicate or non-identifier ids, unknown link
  /// endpoints, zero latency, or a disconnected graph.
  void validate() const;
  bool contains(const NodeId& id) const;

  Json to_json() const;
  static Topology from_json(const Json& j);
  static Topology load(const std::filesystem::path& path);

  /// Star of `hosts` around a single router "r0" with per-link latency drawn
  /// from [min_latency, max_latency] using `seed`.
  static Topology star(const std::vector<NodeId>& hosts, std::uint64_t seed,
                       Tick min_latency = 1, Tick max_latency = 3);
  /// a - r0 - b - ... chain with uniform latency; handy for hand-checked tests.
  static Topology line(const std::vector<NodeId>& chain, Tick latency = 1);
};

}  // namespace ccncheck
