#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ccncheck {

using Bytes = std::vector<std::uint8_t>;

/// Application payload framing: transfer id, channel sequence number and
/// payload length, each little-endian 64-bit, followed by the payload bytes.
/// Transfer id 0 marks a stale answer to a CTS nobody is waiting on.
struct Frame {
  std::uint64_t transfer = 0;
  std::uint64_t seq = 0;
  Bytes payload;

  bool stale() const noexcept { return transfer == 0; }
};

Bytes encode_frame(const Frame& f);
std::optional<Frame> decode_frame(const Bytes& bytes);

std::string base64_encode(const Bytes& bytes);
std::optional<Bytes> base64_decode(std::string_view text);

inline Bytes to_bytes(std::string_view s) { return Bytes(s.begin(), s.end()); }
inline std::string to_string(const Bytes& b) { return std::string(b.begin(), b.end()); }

}  // namespace ccncheck
