#include "simlink/apdu/ber_tlv.hpp"

#include <stdexcept>

namespace simlink::apdu {

Bytes encode_tlv(std::uint8_t tag, ByteView value) {
  if (value.size() > 255) throw std::length_error("TLV value over 255 octets");
  Bytes out{tag};
  if (value.size() >= 0x80) out.push_back(0x81);
  out.push_back(static_cast<std::uint8_t>(value.size()));
  out.insert(out.end(), value.begin(), value.end());
  return out;
}

std::optional<std::vector<Tlv>> parse_tlvs(ByteView raw) {
  std::vector<Tlv> out;
  std::size_t pos = 0;
  while (pos < raw.size()) {
    const auto tag = raw[pos++];
    if (tag == 0x00 || tag == 0xFF) return std::nullopt;
    if (pos >= raw.size()) return std::nullopt;
    std::size_t len = raw[pos++];
    if (len == 0x81) {
      if (pos >= raw.size()) return std::nullopt;
      len = raw[pos++];
      if (len < 0x80) return std::nullopt;
    } else if (len >= 0x80) {
      return std::nullopt;
    }
    if (pos + len > raw.size()) return std::nullopt;
    out.push_back({tag, Bytes(raw.begin() + pos, raw.begin() + pos + len)});
    pos += len;
  }
  return out;
}

}  // namespace simlink::apdu
