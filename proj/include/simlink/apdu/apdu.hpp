#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>

#include "simlink/apdu/bytes.hpp"
#include "simlink/apdu/error.hpp"

namespace simlink::apdu {

// ISO 7816-4 command cases for short APDUs.
enum class IsoCase { Case1 = 1, Case2 = 2, Case3 = 3, Case4 = 4 };

// A short command APDU. Construction validates the size limits, so every
// instance is encodable. Extended-length forms are not representable.
class CommandApdu {
 public:
  static constexpr std::size_t kMaxData = 255;
  static constexpr std::uint16_t kMaxLe = 256;

  CommandApdu(std::uint8_t cla, std::uint8_t ins, std::uint8_t p1,
              std::uint8_t p2, Bytes data = {},
              std::optional<std::uint16_t> le = std::nullopt);

  std::uint8_t cla() const noexcept { return cla_; }
  std::uint8_t ins() const noexcept { return ins_; }
  std::uint8_t p1() const noexcept { return p1_; }
  std::uint8_t p2() const noexcept { return p2_; }
  const Bytes& data() const noexcept { return data_; }
  std::optional<std::uint16_t> le() const noexcept { return le_; }

  IsoCase iso_case() const noexcept;

  bool operator==(const CommandApdu&) const = default;

 private:
  std::uint8_t cla_;
  std::uint8_t ins_;
  std::uint8_t p1_;
  std::uint8_t p2_;
  Bytes data_;
  std::optional<std::uint16_t> le_;
};

// Response APDU: up to 256 data octets followed by the status word.
class ResponseApdu {
 public:
  static constexpr std::size_t kMaxData = 256;

  ResponseApdu(std::uint8_t sw1, std::uint8_t sw2) : ResponseApdu({}, sw1, sw2) {}
  ResponseApdu(Bytes data, std::uint8_t sw1, std::uint8_t sw2);

  const Bytes& data() const noexcept { return data_; }
  std::uint8_t sw1() const noexcept { return sw1_; }
  std::uint8_t sw2() const noexcept { return sw2_; }
  std::uint16_t sw() const noexcept {
    return static_cast<std::uint16_t>((sw1_ << 8) | sw2_);
  }

  bool operator==(const ResponseApdu&) const = default;

 private:
  Bytes data_;
  std::uint8_t sw1_;
  std::uint8_t sw2_;
};

// CLA INS P1 P2 P3 [body]. P3 is 0 for case 1, Le mod 256 for case 2 and
// Lc for cases 3/4. Case 4 appends the Le octet after the data.
Bytes encode_command(const CommandApdu& cmd);

// Inverse of encode_command. A 4-octet input is case 1; a 5-octet input
// with P3 = 0 is also case 1, which means case 2 with Le = 256 aliases to
// case 1 on the wire.
CommandApdu decode_command(ByteView raw);

Bytes encode_response(const ResponseApdu& resp);
ResponseApdu decode_response(ByteView raw);

}  // namespace simlink::apdu
