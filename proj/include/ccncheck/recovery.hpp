#pragma once

#include <map>
#include <optional>
#include <vector>

#include "ccncheck/snapshot.hpp"

namespace ccncheck {

struct RecoveryConfig {
  /// First DISCOVER lifetime; doubles on each of the first `attempts` rounds.
  Tick discover_timeout = 20;
  unsigned discover_attempts = 3;
  /// After the doubling rounds, retry on a timer this often...
  Tick discover_retry_period = 100;
  /// ...at most this many times before going on with whoever answered.
  unsigned discover_max_waits = 20;
};

struct RestartPlan {
  std::uint64_t epoch = 0;
  std::vector<NodeId> processes;
  std::map<NodeId, std::vector<StructuredName>> pending_to_reissue;
};

/// Latest committed epoch, or `epoch` when given. Throws NoCheckpoint when
/// there is no such committed epoch.
RestartPlan plan_restart(const SnapshotStore& store, std::optional<std::uint64_t> epoch = std::nullopt);

}  // namespace ccncheck
