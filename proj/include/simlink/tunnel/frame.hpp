#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "simlink/apdu/bytes.hpp"

namespace simlink::tunnel {

// Wire layout, all integers big-endian:
//   magic "MA" | version 01 | msg_type | session_id u32 | seq u32 |
//   payload_len u16 | payload
inline constexpr std::uint8_t kMagic0 = 0x4D;
inline constexpr std::uint8_t kMagic1 = 0x41;
inline constexpr std::uint8_t kVersion = 0x01;
inline constexpr std::size_t kHeaderSize = 14;
inline constexpr std::size_t kMaxPayload = 4096;

enum class MessageType : std::uint8_t {
  Hello = 0x01,
  HelloAck = 0x02,
  Reset = 0x03,
  AtrInd = 0x04,
  ApduReq = 0x05,
  ApduResp = 0x06,
  Keepalive = 0x07,
  KeepaliveAck = 0x08,
  Error = 0x0E,
  Close = 0x0F,
};

bool is_known_message_type(std::uint8_t code) noexcept;
std::string_view to_string(MessageType type) noexcept;

// msg_type is kept raw so that unknown codes survive decoding and can be
// rejected by the session layer.
struct TunnelFrame {
  std::uint8_t msg_type = 0;
  std::uint32_t session_id = 0;
  std::uint32_t seq = 0;
  Bytes payload;

  TunnelFrame() = default;
  TunnelFrame(std::uint8_t type, std::uint32_t session, std::uint32_t sequence,
              Bytes body = {})
      : msg_type(type), session_id(session), seq(sequence), payload(std::move(body)) {}
  TunnelFrame(MessageType type, std::uint32_t session, std::uint32_t sequence,
              Bytes body = {})
      : TunnelFrame(static_cast<std::uint8_t>(type), session, sequence, std::move(body)) {}

  MessageType type() const noexcept { return static_cast<MessageType>(msg_type); }

  bool operator==(const TunnelFrame&) const = default;
};

enum class FrameErrc { BadMagic, BadVersion, Oversize, Truncated };

std::string_view to_string(FrameErrc code) noexcept;

class FrameError : public std::runtime_error {
 public:
  FrameError(FrameErrc code, const std::string& detail);
  FrameErrc code() const noexcept { return code_; }

 private:
  FrameErrc code_;
};

// Throws FrameError(Oversize) for payloads over 4096 octets.
Bytes frame_encode(std::uint8_t msg_type, std::uint32_t session_id,
                   std::uint32_t seq, ByteView payload);
Bytes frame_encode(const TunnelFrame& frame);

struct DecodedFrame {
  TunnelFrame frame;
  std::size_t consumed = 0;  // 14 + payload_len
};

// Decodes the frame at the start of `stream`. Returns nullopt when more
// octets are needed; throws on BadMagic, BadVersion or Oversize as soon as
// the offending header octets are visible.
std::optional<DecodedFrame> frame_try_decode(ByteView stream);

// Like frame_try_decode but an incomplete frame is a Truncated error.
DecodedFrame frame_decode(ByteView stream);

// Reassembles frames from arbitrarily segmented input.
class FrameReader {
 public:
  std::vector<TunnelFrame> feed(ByteView chunk);

  bool mid_frame() const noexcept { return !buffer_.empty(); }

  // Call at end of stream; throws Truncated if a partial frame is buffered.
  void finish() const;

 private:
  Bytes buffer_;
};

}  // namespace simlink::tunnel
