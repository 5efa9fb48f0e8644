#include "simlink/tunnel/frame.hpp"

#include <string>

#include <fmt/format.h>

namespace simlink::tunnel {

namespace {

void put_u16(Bytes& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

void put_u32(Bytes& out, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) {
    out.push_back(static_cast<std::uint8_t>(v >> shift));
  }
}

std::uint32_t get_u32(ByteView in, std::size_t at) {
  return (std::uint32_t{in[at]} << 24) | (std::uint32_t{in[at + 1]} << 16) |
         (std::uint32_t{in[at + 2]} << 8) | std::uint32_t{in[at + 3]};
}

}  // namespace

bool is_known_message_type(std::uint8_t code) noexcept {
  return (code >= 0x01 && code <= 0x08) || code == 0x0E || code == 0x0F;
}

std::string_view to_string(MessageType type) noexcept {
  switch (type) {
    case MessageType::Hello:
      return "Hello";
    case MessageType::HelloAck:
      return "HelloAck";
    case MessageType::Reset:
      return "Reset";
    case MessageType::AtrInd:
      return "AtrInd";
    case MessageType::ApduReq:
      return "ApduReq";
    case MessageType::ApduResp:
      return "ApduResp";
    case MessageType::Keepalive:
      return "Keepalive";
    case MessageType::KeepaliveAck:
      return "KeepaliveAck";
    case MessageType::Error:
      return "Error";
    case MessageType::Close:
      return "Close";
  }
  return "Unknown";
}

std::string_view to_string(FrameErrc code) noexcept {
  switch (code) {
    case FrameErrc::BadMagic:
      return "BadMagic";
    case FrameErrc::BadVersion:
      return "BadVersion";
    case FrameErrc::Oversize:
      return "Oversize";
    case FrameErrc::Truncated:
      return "Truncated";
  }
  return "Unknown";
}

FrameError::FrameError(FrameErrc code, const std::string& detail)
    : std::runtime_error(fmt::format("{}: {}", to_string(code), detail)), code_(code) {}

Bytes frame_encode(std::uint8_t msg_type, std::uint32_t session_id,
                   std::uint32_t seq, ByteView payload) {
  if (payload.size() > kMaxPayload) {
    throw FrameError(FrameErrc::Oversize,
                     fmt::format("payload of {} octets", payload.size()));
  }
  Bytes out{kMagic0, kMagic1, kVersion, msg_type};
  out.reserve(kHeaderSize + payload.size());
  put_u32(out, session_id);
  put_u32(out, seq);
  put_u16(out, static_cast<std::uint16_t>(payload.size()));
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

Bytes frame_encode(const TunnelFrame& frame) {
  return frame_encode(frame.msg_type, frame.session_id, frame.seq, frame.payload);
}

std::optional<DecodedFrame> frame_try_decode(ByteView stream) {
  if (stream.size() >= 1 && stream[0] != kMagic0) {
    throw FrameError(FrameErrc::BadMagic, fmt::format("first octet {:02X}", stream[0]));
  }
  if (stream.size() >= 2 && stream[1] != kMagic1) {
    throw FrameError(FrameErrc::BadMagic, fmt::format("second octet {:02X}", stream[1]));
  }
  if (stream.size() >= 3 && stream[2] != kVersion) {
    throw FrameError(FrameErrc::BadVersion, fmt::format("version {:02X}", stream[2]));
  }
  if (stream.size() < kHeaderSize) return std::nullopt;

  const std::size_t payload_len = (std::size_t{stream[12]} << 8) | stream[13];
  if (payload_len > kMaxPayload) {
    throw FrameError(FrameErrc::Oversize, fmt::format("payload_len {}", payload_len));
  }
  if (stream.size() < kHeaderSize + payload_len) return std::nullopt;

  DecodedFrame out;
  out.frame.msg_type = stream[3];
  out.frame.session_id = get_u32(stream, 4);
  out.frame.seq = get_u32(stream, 8);
  out.frame.payload.assign(stream.begin() + kHeaderSize,
                           stream.begin() + static_cast<std::ptrdiff_t>(kHeaderSize + payload_len));
  out.consumed = kHeaderSize + payload_len;
  return out;
}

DecodedFrame frame_decode(ByteView stream) {
  auto decoded = frame_try_decode(stream);
  if (!decoded) {
    throw FrameError(FrameErrc::Truncated,
                     fmt::format("stream ended after {} octets", stream.size()));
  }
  return std::move(*decoded);
}

std::vector<TunnelFrame> FrameReader::feed(ByteView chunk) {
  buffer_.insert(buffer_.end(), chunk.begin(), chunk.end());
  std::vector<TunnelFrame> frames;
  std::size_t offset = 0;
  while (offset < buffer_.size()) {
    auto decoded = frame_try_decode(ByteView(buffer_).subspan(offset));
    if (!decoded) break;
    offset += decoded->consumed;
    frames.push_back(std::move(decoded->frame));
  }
  buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(offset));
  return frames;
}

void FrameReader::finish() const {
  if (mid_frame()) {
    throw FrameError(FrameErrc::Truncated,
                     fmt::format("{} octets of an unfinished frame", buffer_.size()));
  }
}

}  // namespace simlink::tunnel
