#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ccncheck/checkpoint.hpp"

namespace ccncheck {

/// Violations found by a trace checker; empty means the property holds.
struct CheckReport {
  std::string property;
  std::size_t checked = 0;
  std::vector<std::string> violations;
  bool ok() const noexcept { return violations.empty(); }
};

/// Every delivered application transfer shows RTS issued, RTS received,
/// CTS issued, payload sent and payload delivered in trace order. With
/// `exactly_once`, each of those appears once per transfer.
CheckReport check_handshakes(const Trace& trace, bool exactly_once);

/// Per channel, deliveries carry consecutive sequence numbers in the order the
/// sender issued them.
CheckReport check_fifo(const Trace& trace);

/// No application RTS is issued by a process between its suspend and the
/// matching resume (or its crash).
CheckReport check_blocking(const Trace& trace);

struct OutputRecord {
  std::uint64_t step = 0;
  std::string value;
  friend bool operator==(const OutputRecord&, const OutputRecord&) = default;
};

/// Per-node application outputs in trace order, deduplicated by step. A
/// replayed step with a different value is reported in `conflicts`.
struct OutputProjection {
  std::map<NodeId, std::vector<OutputRecord>> outputs;
  std::vector<std::string> conflicts;
};
OutputProjection project_outputs(const Trace& trace);

struct EquivalenceReport {
  bool equal = true;
  std::optional<std::string> first_divergence;
};
EquivalenceReport check_output_equivalence(const Trace& reference, const Trace& faulty);

/// Deduplicated outputs across all nodes, ordered by step, are F(first..n).
/// A run resumed from a snapshot starts after the highest restored step.
CheckReport check_fibonacci(const Trace& trace, std::uint64_t n, std::uint64_t first = 1);

/// Each counter node outputs 1..steps gap-free after deduplication, and the
/// first output after every restore is the restored value + 1.
CheckReport check_counter(const Trace& trace, std::uint64_t steps);

/// Consistency of every committed epoch in `store` against the trace.
std::vector<ConsistencyReport> verify_store(const SnapshotStore& store, const Trace& trace);

/// Every check that applies to an arbitrary run: handshakes, FIFO, blocking,
/// output dedup conflicts and consistency of committed epochs.
std::vector<CheckReport> verify_run(const Trace& trace, const SnapshotStore& store);

}  // namespace ccncheck
