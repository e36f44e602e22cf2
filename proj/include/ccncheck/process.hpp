#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>

#include "ccncheck/apps.hpp"
#include "ccncheck/checkpoint.hpp"
#include "ccncheck/recovery.hpp"

namespace ccncheck {

struct ProcessConfig {
  std::string app;  // namespace component, e.g. "fib"
  NodeId coordinator;
  CheckpointConfig checkpoint;
  RecoveryConfig recovery;
};

/// One application process: its app, its messenger, and its side of the
/// checkpoint and recovery protocols.
class ProcessNode final : public NodeAgent {
 public:
  enum class Phase { Down, Running, Suspended, Recovering };
  using AppFactory = std::function<std::unique_ptr<App>()>;

  ProcessNode(NodeId self, std::uint32_t node_number, AppFactory factory, SnapshotStore store,
              ProcessConfig config);

  const NodeId& self() const noexcept { return self_; }
  Phase phase() const noexcept { return phase_; }
  const App& app() const { return *app_; }
  const Messenger& messenger() const noexcept { return messenger_; }
  std::optional<std::uint64_t> active_epoch() const noexcept { return epoch_; }

  /// First start: registers the prefix and starts the app after `delay`.
  void boot(NodeContext& ctx, Tick delay);
  /// Restart from a snapshot (or from scratch when `snapshot` is empty):
  /// restore, re-register, discover peers, reissue pending interests, resume.
  void recover(NodeContext& ctx, const std::optional<LocalSnapshot>& snapshot, std::uint64_t epoch);

  LocalSnapshot take_snapshot(Tick now) const;

  void on_interest(NodeContext& ctx, const Interest& interest) override;
  void on_data(NodeContext& ctx, const Data& data) override;
  void on_timeout(NodeContext& ctx, const Interest& interest) override;
  void on_timer(NodeContext& ctx, std::uint64_t tag) override;
  void on_crash() override;

 private:
  static constexpr std::uint64_t kStartTimer = 1;
  static constexpr std::uint64_t kTickTimer = 2;
  static constexpr std::uint64_t kDiscoverTimer = 3;
  static constexpr std::uint64_t kLocalAbortTimer = 4;  // | epoch << 4

  // checkpoint side
  void handle_check(NodeContext& ctx, const std::optional<CheckMarker>& marker);
  void suspend(NodeContext& ctx, std::uint64_t epoch);
  void flush_channels(NodeContext& ctx);
  void on_flush(NodeContext& ctx, const Interest& flush);
  void answer_held_flushes(NodeContext& ctx);
  void report_drained(NodeContext& ctx);
  void snapshot(NodeContext& ctx);
  void resume(NodeContext& ctx, const std::string& why);

  // recovery side
  void discover_round(NodeContext& ctx);
  void on_discover_reply(NodeContext& ctx, Nonce nonce);
  void on_discover_timeout(NodeContext& ctx, Nonce nonce);
  void finish_discovery(NodeContext& ctx);

  // application
  void start_app(NodeContext& ctx);
  void tick_app(NodeContext& ctx);
  void consume(NodeContext& ctx);
  void apply(NodeContext& ctx, const StepResult& r);
  void reset_volatile();

  NodeId self_;
  std::uint32_t node_number_;
  AppFactory factory_;
  SnapshotStore store_;
  ProcessConfig config_;

  Phase phase_ = Phase::Down;
  std::unique_ptr<App> app_;
  Messenger messenger_;
  bool start_due_ = false;
  bool tick_due_ = false;

  // current epoch
  std::optional<std::uint64_t> epoch_;
  std::map<Nonce, NodeId> flushes_;
  std::vector<Interest> held_flushes_;
  bool drained_ = false;
  bool snapshotted_ = false;

  // recovery
  std::uint64_t restored_epoch_ = 0;
  std::vector<NodeId> peers_;
  std::set<NodeId> discovered_;
  std::map<Nonce, NodeId> discovering_;
  std::vector<StructuredName> pending_;
  unsigned attempt_ = 0;
  unsigned waits_ = 0;
};

}  // namespace ccncheck
