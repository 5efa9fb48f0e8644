#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "simlink/apdu/bytes.hpp"

namespace simlink::apdu {

// Single-octet-tag BER-TLV as used by the SIM toolkit.
struct Tlv {
  std::uint8_t tag;
  Bytes value;

  bool operator==(const Tlv&) const = default;
};

// Length as 1 octet (< 0x80) or 0x81 nn. Values above 255 octets are not
// used by toolkit commands and are rejected.
Bytes encode_tlv(std::uint8_t tag, ByteView value);

// Parses a concatenation of TLVs. Returns nullopt on malformed input.
std::optional<std::vector<Tlv>> parse_tlvs(ByteView raw);

}  // namespace simlink::apdu
