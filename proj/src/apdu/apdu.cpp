#include "simlink/apdu/apdu.hpp"

#include <string>
#include <utility>

namespace simlink::apdu {

namespace {

constexpr std::size_t kHeaderSize = 4;  // CLA INS P1 P2
constexpr std::size_t kTpduHeaderSize = 5;  // ... P3

std::uint16_t le_from_octet(std::uint8_t octet) {
  return octet == 0 ? 256 : octet;
}

}  // namespace

CommandApdu::CommandApdu(std::uint8_t cla, std::uint8_t ins, std::uint8_t p1,
                         std::uint8_t p2, Bytes data,
                         std::optional<std::uint16_t> le)
    : cla_(cla), ins_(ins), p1_(p1), p2_(p2), data_(std::move(data)), le_(le) {
  if (data_.size() > kMaxData) {
    throw ApduError(ApduErrc::InvalidArgument,
                    "command data exceeds 255 octets (" +
                        std::to_string(data_.size()) + ")");
  }
  if (le_ && (*le_ == 0 || *le_ > kMaxLe)) {
    throw ApduError(ApduErrc::InvalidArgument,
                    "Le outside 1..256 (" + std::to_string(*le_) + ")");
  }
}

IsoCase CommandApdu::iso_case() const noexcept {
  if (data_.empty()) return le_ ? IsoCase::Case2 : IsoCase::Case1;
  return le_ ? IsoCase::Case4 : IsoCase::Case3;
}

ResponseApdu::ResponseApdu(Bytes data, std::uint8_t sw1, std::uint8_t sw2)
    : data_(std::move(data)), sw1_(sw1), sw2_(sw2) {
  if (data_.size() > kMaxData) {
    throw ApduError(ApduErrc::InvalidArgument,
                    "response data exceeds 256 octets (" +
                        std::to_string(data_.size()) + ")");
  }
}

Bytes encode_command(const CommandApdu& cmd) {
  Bytes out{cmd.cla(), cmd.ins(), cmd.p1(), cmd.p2()};
  switch (cmd.iso_case()) {
    case IsoCase::Case1:
      out.push_back(0x00);
      break;
    case IsoCase::Case2:
      out.push_back(static_cast<std::uint8_t>(*cmd.le() % 256));
      break;
    case IsoCase::Case3:
      out.push_back(static_cast<std::uint8_t>(cmd.data().size()));
      out.insert(out.end(), cmd.data().begin(), cmd.data().end());
      break;
    case IsoCase::Case4:
      out.push_back(static_cast<std::uint8_t>(cmd.data().size()));
      out.insert(out.end(), cmd.data().begin(), cmd.data().end());
      out.push_back(static_cast<std::uint8_t>(*cmd.le() % 256));
      break;
  }
  return out;
}

CommandApdu decode_command(ByteView raw) {
  if (raw.size() < kHeaderSize) {
    throw ApduError(ApduErrc::Truncated, "command shorter than 4 octets");
  }
  const auto cla = raw[0], ins = raw[1], p1 = raw[2], p2 = raw[3];
  if (raw.size() == kHeaderSize) return CommandApdu(cla, ins, p1, p2);

  const std::uint8_t p3 = raw[4];
  if (raw.size() == kTpduHeaderSize) {
    if (p3 == 0) return CommandApdu(cla, ins, p1, p2);
    return CommandApdu(cla, ins, p1, p2, {}, le_from_octet(p3));
  }
  // A body follows, so P3 is Lc.
  if (p3 == 0) {
    throw ApduError(ApduErrc::TrailingGarbage,
                    "octets after a header with P3 = 0");
  }
  const std::size_t case3_len = kTpduHeaderSize + p3;
  if (raw.size() < case3_len) {
    throw ApduError(ApduErrc::Truncated,
                    "body has " + std::to_string(raw.size() - kTpduHeaderSize) +
                        " octets, P3 announces " + std::to_string(p3));
  }
  Bytes data(raw.begin() + kTpduHeaderSize, raw.begin() + case3_len);
  if (raw.size() == case3_len) {
    return CommandApdu(cla, ins, p1, p2, std::move(data));
  }
  if (raw.size() == case3_len + 1) {
    return CommandApdu(cla, ins, p1, p2, std::move(data),
                       le_from_octet(raw[case3_len]));
  }
  throw ApduError(ApduErrc::TrailingGarbage,
                  std::to_string(raw.size() - case3_len - 1) +
                      " octets after Le");
}

Bytes encode_response(const ResponseApdu& resp) {
  Bytes out(resp.data());
  out.push_back(resp.sw1());
  out.push_back(resp.sw2());
  return out;
}

ResponseApdu decode_response(ByteView raw) {
  if (raw.size() < 2) {
    throw ApduError(ApduErrc::Truncated, "response without status word");
  }
  if (raw.size() - 2 > ResponseApdu::kMaxData) {
    throw ApduError(ApduErrc::Oversize, "response data exceeds 256 octets");
  }
  return ResponseApdu(Bytes(raw.begin(), raw.end() - 2), raw[raw.size() - 2],
                      raw[raw.size() - 1]);
}

}  // namespace simlink::apdu
