#include "ccncheck/names.hpp"

#include <array>
#include <charconv>

#include "ccncheck/errors.hpp"

namespace ccncheck {
namespace {

constexpr std::string_view kScheme = "ccnx://";

bool is_unreserved(unsigned char c) {
  return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-' ||
         c == '.' || c == '_' || c == '~';
}

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;  // lowercase hex is non-canonical
}

std::optional<std::uint64_t> parse_epoch(std::string_view digits) {
  if (digits.empty() || (digits.size() > 1 && digits.front() == '0')) return std::nullopt;
  std::uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
  if (ec != std::errc{} || ptr != digits.data() + digits.size()) return std::nullopt;
  return value;
}

void require_identifier(const std::string& component, const std::string& value) {
  if (!is_identifier(value)) throw MalformedName(component, "'" + value + "' is not an identifier");
}

}  // namespace

std::string_view signal_token(Signal s) noexcept {
  switch (s) {
    case Signal::Rts: return "RTS";
    case Signal::Cts: return "CTS";
    case Signal::Check: return "check";
    case Signal::Flush: return "flush";
    case Signal::Data: return "data";
    case Signal::Discover: return "discover";
  }
  return "";
}

std::optional<Signal> signal_from_token(std::string_view token) noexcept {
  for (Signal s : {Signal::Rts, Signal::Cts, Signal::Check, Signal::Flush, Signal::Data,
                   Signal::Discover}) {
    if (signal_token(s) == token) return s;
  }
  return std::nullopt;
}

std::string format_marker(const CheckMarker& m) {
  std::string epoch = "e" + std::to_string(m.epoch);
  switch (m.phase) {
    case CheckMarker::Phase::Suspend: return epoch;
    case CheckMarker::Phase::Snapshot: return "snap-" + epoch;
    case CheckMarker::Phase::Resume: return "resume-" + epoch;
  }
  return epoch;
}

std::optional<CheckMarker> parse_marker(std::string_view token) noexcept {
  CheckMarker m;
  if (token.starts_with("snap-")) {
    m.phase = CheckMarker::Phase::Snapshot;
    token.remove_prefix(5);
  } else if (token.starts_with("resume-")) {
    m.phase = CheckMarker::Phase::Resume;
    token.remove_prefix(7);
  }
  if (!token.starts_with('e')) return std::nullopt;
  auto epoch = parse_epoch(token.substr(1));
  if (!epoch) return std::nullopt;
  m.epoch = *epoch;
  return m;
}

StructuredName StructuredName::rts(std::string app, std::string receiver, std::string sender) {
  return {std::move(app), std::move(receiver), Signal::Rts, std::move(sender), std::nullopt,
          std::nullopt};
}

StructuredName StructuredName::cts(std::string app, std::string receiver, std::string sender) {
  return {std::move(app), std::move(receiver), Signal::Cts, std::move(sender), std::nullopt,
          std::nullopt};
}

StructuredName StructuredName::check(std::string app, std::string receiver,
                                     std::optional<CheckMarker> marker) {
  return {std::move(app), std::move(receiver), Signal::Check, std::nullopt, std::nullopt, marker};
}

StructuredName StructuredName::flush(std::string app, std::string receiver,
                                     std::string last_interest) {
  return {std::move(app), std::move(receiver), Signal::Flush, std::nullopt,
          std::move(last_interest), std::nullopt};
}

StructuredName StructuredName::discover(std::string app, std::string receiver) {
  return {std::move(app), std::move(receiver), Signal::Discover, std::nullopt, std::nullopt,
          std::nullopt};
}

bool is_identifier(std::string_view s) noexcept {
  if (s.empty()) return false;
  for (char c : s) {
    bool ok = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') ||
              c == '_' || c == '-';
    if (!ok) return false;
  }
  return true;
}

void validate(const StructuredName& n) {
  require_identifier("app", n.app);
  require_identifier("receiver", n.receiver);
  switch (n.signal) {
    case Signal::Rts:
    case Signal::Cts:
    case Signal::Data:
      if (!n.sender) throw MalformedName("sender", "signal requires a sender");
      require_identifier("sender", *n.sender);
      if (n.appended) throw MalformedName("appended", "signal carries no appended name");
      if (n.marker) throw MalformedName("marker", "only check interests carry a marker");
      break;
    case Signal::Check:
      if (n.sender) throw MalformedName("sender", "check is one-way and carries no sender");
      if (n.appended) throw MalformedName("appended", "check carries no appended name");
      break;
    case Signal::Flush:
      if (n.sender) throw MalformedName("sender", "flush carries no sender");
      if (!n.appended || n.appended->empty())
        throw MalformedName("appended", "flush requires the last interest name");
      if (n.marker) throw MalformedName("marker", "only check interests carry a marker");
      break;
    case Signal::Discover:
      if (n.sender) throw MalformedName("sender", "discover carries no sender");
      if (n.appended) throw MalformedName("appended", "discover carries no appended name");
      if (n.marker) throw MalformedName("marker", "only check interests carry a marker");
      break;
  }
}

std::string format_name(const StructuredName& n) {
  validate(n);
  std::string out;
  out.reserve(64);
  out.append(kScheme).append(n.app).append("/").append(n.receiver).append("/");
  out.append(signal_token(n.signal));
  if (n.sender) out.append("/").append(*n.sender);
  if (n.marker) out.append("/").append(format_marker(*n.marker));
  if (n.appended) out.append("/").append(escape_component(*n.appended));
  return out;
}

StructuredName parse_name(std::string_view uri) {
  if (!uri.starts_with(kScheme)) throw MalformedName("scheme", "expected ccnx:// prefix");
  auto parts = name_components(uri);
  static constexpr std::array<const char*, 3> kLeading = {"app", "receiver", "signal"};
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (parts[i].empty()) {
      std::string which = i < kLeading.size() ? kLeading[i] : "count";
      throw MalformedName(which, "empty component at position " + std::to_string(i));
    }
  }
  if (parts.size() < 3) throw MalformedName("count", "need at least app/receiver/signal");

  StructuredName n;
  n.app = parts[0];
  n.receiver = parts[1];
  require_identifier("app", n.app);
  require_identifier("receiver", n.receiver);
  auto signal = signal_from_token(parts[2]);
  if (!signal) throw MalformedName("signal", "unknown signal '" + parts[2] + "'");
  n.signal = *signal;

  switch (n.signal) {
    case Signal::Rts:
    case Signal::Cts:
    case Signal::Data:
      if (parts.size() != 4) throw MalformedName("count", "expected app/receiver/signal/sender");
      require_identifier("sender", parts[3]);
      n.sender = parts[3];
      break;
    case Signal::Check:
      if (parts.size() > 4) throw MalformedName("count", "check takes at most one marker");
      if (parts.size() == 4) {
        n.marker = parse_marker(parts[3]);
        if (!n.marker) throw MalformedName("marker", "'" + parts[3] + "' is not a check marker");
      }
      break;
    case Signal::Flush: {
      if (parts.size() != 4) throw MalformedName("count", "expected app/receiver/flush/appended");
      auto raw = unescape_component(parts[3]);
      if (!raw || raw->empty()) throw MalformedName("appended", "bad percent-escaping");
      n.appended = std::move(*raw);
      break;
    }
    case Signal::Discover:
      if (parts.size() != 3) throw MalformedName("count", "discover takes no further components");
      break;
  }
  return n;
}

std::string escape_component(std::string_view raw) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  out.reserve(raw.size() * 3);
  for (unsigned char c : raw) {
    if (is_unreserved(c)) {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back('%');
      out.push_back(kHex[c >> 4]);
      out.push_back(kHex[c & 0xF]);
    }
  }
  return out;
}

std::optional<std::string> unescape_component(std::string_view escaped) {
  std::string out;
  out.reserve(escaped.size());
  for (std::size_t i = 0; i < escaped.size(); ++i) {
    unsigned char c = static_cast<unsigned char>(escaped[i]);
    if (c == '%') {
      if (i + 2 >= escaped.size()) return std::nullopt;
      int hi = hex_value(escaped[i + 1]);
      int lo = hex_value(escaped[i + 2]);
      if (hi < 0 || lo < 0) return std::nullopt;
      auto decoded = static_cast<unsigned char>(hi * 16 + lo);
      if (is_unreserved(decoded)) return std::nullopt;
      out.push_back(static_cast<char>(decoded));
      i += 2;
    } else if (is_unreserved(c)) {
      out.push_back(static_cast<char>(c));
    } else {
      return std::nullopt;
    }
  }
  return out;
}

std::string node_prefix(std::string_view app, std::string_view node) {
  std::string p = "/";
  p.append(app).append("/").append(node);
  return p;
}

std::vector<std::string> name_components(std::string_view uri_or_prefix) {
  std::string_view rest = uri_or_prefix;
  if (rest.starts_with(kScheme)) {
    rest.remove_prefix(kScheme.size());
  } else if (rest.starts_with('/')) {
    rest.remove_prefix(1);
  }
  std::vector<std::string> parts;
  if (rest.empty()) return parts;
  std::size_t start = 0;
  while (true) {
    auto slash = rest.find('/', start);
    parts.emplace_back(rest.substr(start, slash == std::string_view::npos ? slash : slash - start));
    if (slash == std::string_view::npos) break;
    start = slash + 1;
  }
  return parts;
}

}  // namespace ccncheck
