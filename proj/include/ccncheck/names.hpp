#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ccncheck {

// Interest naming scheme:
//
//   ccnx://<app>/<receiver>/<signal>[/<sender>][/<appended>]
//
//   RTS, CTS, data   sender required, nothing appended
//   check            no sender; optional phase marker (e<N>, snap-e<N>, resume-e<N>)
//   flush            no sender; appended = percent-escaped last interest name
//   discover         no sender, nothing appended
//
// Every name for receiver R starts with "ccnx://<app>/<R>/", so the FIB
// prefix /<app>/<R> routes every signal type to R.

enum class Signal { Rts, Cts, Check, Flush, Data, Discover };

std::string_view signal_token(Signal s) noexcept;
std::optional<Signal> signal_from_token(std::string_view token) noexcept;

/// Phase carried by a check interest. The bare "check" name has no marker.
struct CheckMarker {
  enum class Phase { Suspend, Snapshot, Resume };
  Phase phase = Phase::Suspend;
  std::uint64_t epoch = 0;

  friend bool operator==(const CheckMarker&, const CheckMarker&) = default;
};

std::string format_marker(const CheckMarker& m);
std::optional<CheckMarker> parse_marker(std::string_view token) noexcept;

struct StructuredName {
  std::string app;
  std::string receiver;
  Signal signal = Signal::Rts;
  std::optional<std::string> sender;
  std::optional<std::string> appended;
  std::optional<CheckMarker> marker;

  friend bool operator==(const StructuredName&, const StructuredName&) = default;

  static StructuredName rts(std::string app, std::string receiver, std::string sender);
  static StructuredName cts(std::string app, std::string receiver, std::string sender);
  static StructuredName check(std::string app, std::string receiver,
                              std::optional<CheckMarker> marker = std::nullopt);
  static StructuredName flush(std::string app, std::string receiver, std::string last_interest);
  static StructuredName discover(std::string app, std::string receiver);
};

/// True for non-empty strings over [A-Za-z0-9_-].
bool is_identifier(std::string_view s) noexcept;

/// Throws MalformedName if n breaks a per-signal shape rule.
void validate(const StructuredName& n);

std::string format_name(const StructuredName& n);
StructuredName parse_name(std::string_view uri);

/// Percent-escaping used for the appended component. Unreserved bytes
/// [A-Za-z0-9-._~] pass through, everything else becomes %XX (uppercase).
std::string escape_component(std::string_view raw);
/// Inverse of escape_component. Rejects non-canonical encodings so that
/// escape(unescape(s)) == s for every accepted s.
std::optional<std::string> unescape_component(std::string_view escaped);

/// "/<app>/<node>" prefix under which a node registers.
std::string node_prefix(std::string_view app, std::string_view node);

/// Splits "ccnx://a/b/c" or "/a/b" into components. No unescaping.
std::vector<std::string> name_components(std::string_view uri_or_prefix);

}  // namespace ccncheck
