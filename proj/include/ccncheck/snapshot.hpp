#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ccncheck/messaging.hpp"

namespace ccncheck {

struct LocalSnapshot {
  NodeId process;
  std::uint64_t epoch = 0;
  Tick taken_at = 0;
  std::uint64_t app_step = 0;
  Bytes app_state;
  MessagingState messaging;
  std::vector<StructuredName> unanswered_interests;
  std::vector<Delivery> delivered_not_consumed;
  std::vector<NodeId> peers;

  std::vector<ChannelLog> channel_logs() const;

  friend bool operator==(const LocalSnapshot&, const LocalSnapshot&) = default;
};

Json to_json(const LocalSnapshot& s);
LocalSnapshot snapshot_from_json(const Json& j);

struct GlobalCheckpoint {
  std::uint64_t epoch = 0;
  bool committed = false;
  std::vector<NodeId> processes;
  std::map<NodeId, LocalSnapshot> snapshots;
};

struct Manifest {
  std::uint64_t epoch = 0;
  std::vector<NodeId> processes;
  bool committed = false;
};

/// On-disk layout:
///   <root>/<epoch>/<process>.snap.json
///   <root>/<epoch>/MANIFEST.json   {"epoch":N,"processes":[...],"committed":true}
/// Every file is written to a temporary name and renamed into place, and the
/// manifest is written last.
class SnapshotStore {
 public:
  explicit SnapshotStore(std::filesystem::path root);

  const std::filesystem::path& root() const noexcept { return root_; }

  void create_epoch(std::uint64_t epoch) const;
  void write_snapshot(const LocalSnapshot& s) const;
  std::optional<LocalSnapshot> read_snapshot(std::uint64_t epoch, const NodeId& process) const;
  void write_manifest(const Manifest& m) const;
  std::optional<Manifest> read_manifest(std::uint64_t epoch) const;

  /// Epoch directories present, ascending.
  std::vector<std::uint64_t> epochs() const;
  std::uint64_t max_epoch() const;
  std::optional<std::uint64_t> latest_committed() const;
  GlobalCheckpoint load(std::uint64_t epoch) const;

 private:
  std::filesystem::path epoch_dir(std::uint64_t epoch) const;
  std::filesystem::path root_;
};

}  // namespace ccncheck
