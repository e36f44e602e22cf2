#include "ccncheck/codec.hpp"

#include <boost/beast/core/detail/base64.hpp>

namespace ccncheck {
namespace {

void put_u64(Bytes& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t get_u64(const Bytes& in, std::size_t at) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in[at + i]) << (8 * i);
  return v;
}

}  // namespace

Bytes encode_frame(const Frame& f) {
  Bytes out;
  out.reserve(24 + f.payload.size());
  put_u64(out, f.transfer);
  put_u64(out, f.seq);
  put_u64(out, f.payload.size());
  out.insert(out.end(), f.payload.begin(), f.payload.end());
  return out;
}

std::optional<Frame> decode_frame(const Bytes& bytes) {
  if (bytes.size() < 24) return std::nullopt;
  Frame f;
  f.transfer = get_u64(bytes, 0);
  f.seq = get_u64(bytes, 8);
  auto len = get_u64(bytes, 16);
  if (len != bytes.size() - 24) return std::nullopt;
  f.payload.assign(bytes.begin() + 24, bytes.end());
  return f;
}

std::string base64_encode(const Bytes& bytes) {
  namespace b64 = boost::beast::detail::base64;
  std::string out(b64::encoded_size(bytes.size()), '\0');
  out.resize(b64::encode(out.data(), bytes.data(), bytes.size()));
  return out;
}

std::optional<Bytes> base64_decode(std::string_view text) {
  namespace b64 = boost::beast::detail::base64;
  Bytes out(b64::decoded_size(text.size()));
  auto [written, read] = b64::decode(out.data(), text.data(), text.size());
  if (text.size() % 4 != 0 || text.size() - read > 2) return std::nullopt;
  for (std::size_t i = read; i < text.size(); ++i)
    if (text[i] != '=') return std::nullopt;
  out.resize(written);
  return out;
}

}  // namespace ccncheck
