#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace ccncheck {

using Tick = std::uint64_t;
using Json = nlohmann::ordered_json;

/// One record of the run log. Serialized as a single JSON line with keys in
/// the order t, seq, ev, node, then the event-specific fields.
struct TraceEvent {
  Tick t = 0;
  std::uint64_t seq = 0;
  std::string ev;
  std::string node;
  Json fields = Json::object();

  std::string to_json_line() const;
  static TraceEvent from_json(const Json& j);

  /// Convenience accessors for the optional fields; default when absent.
  std::string str(std::string_view key) const;
  std::uint64_t num(std::string_view key, std::uint64_t fallback = 0) const;
  bool flag(std::string_view key) const;
  bool has(std::string_view key) const;
};

/// Append-only event log ordered by (t, seq).
class Trace {
 public:
  const TraceEvent& append(Tick t, std::string ev, std::string node, Json fields = Json::object());

  const std::vector<TraceEvent>& events() const noexcept { return events_; }
  std::size_t size() const noexcept { return events_.size(); }
  const TraceEvent& operator[](std::size_t i) const { return events_[i]; }

  std::string to_jsonl() const;
  void write_jsonl(const std::filesystem::path& path) const;
  static Trace from_jsonl(std::string_view text);
  static Trace read_jsonl(const std::filesystem::path& path);

 private:
  std::vector<TraceEvent> events_;
};

}  // namespace ccncheck
