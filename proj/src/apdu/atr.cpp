#include "simlink/apdu/atr.hpp"

#include <string>

namespace simlink::apdu {

namespace {

constexpr std::uint8_t kDirectTs = 0x3B;
constexpr std::uint8_t kInverseTs = 0x3F;

constexpr InterfaceKind kKinds[] = {InterfaceKind::TA, InterfaceKind::TB,
                                    InterfaceKind::TC, InterfaceKind::TD};

}  // namespace

std::vector<int> Atr::protocols() const {
  std::vector<int> out;
  for (const auto& ib : interface_bytes) {
    if (ib.kind == InterfaceKind::TD) out.push_back(ib.value & 0x0F);
  }
  if (out.empty()) out.push_back(0);
  return out;
}

Atr parse_atr(ByteView raw) {
  if (raw.empty()) throw ApduError(ApduErrc::Truncated, "empty ATR");
  Atr atr;
  if (raw[0] == kDirectTs) {
    atr.convention = Convention::Direct;
  } else if (raw[0] == kInverseTs) {
    atr.convention = Convention::Inverse;
  } else {
    throw ApduError(ApduErrc::UnknownConvention, "TS is not 3B or 3F");
  }
  if (raw.size() < 2) throw ApduError(ApduErrc::Truncated, "missing T0");
  atr.t0 = raw[1];

  std::size_t pos = 2;
  auto need = [&](std::size_t n, const char* what) {
    if (pos + n > Atr::kMaxLength) {
      throw ApduError(ApduErrc::Oversize,
                      std::string(what) + " beyond 33 octets");
    }
    if (pos + n > raw.size()) {
      throw ApduError(ApduErrc::Truncated, std::string("missing ") + what);
    }
  };

  // Each Y nibble says which of TAi..TDi follow; TDi carries Y(i+1).
  std::uint8_t presence = atr.t0 >> 4;
  bool tck_required = false;
  for (int index = 1; presence != 0; ++index) {
    std::uint8_t next_presence = 0;
    for (int bit = 0; bit < 4; ++bit) {
      if ((presence & (1 << bit)) == 0) continue;
      need(1, "interface byte");
      const auto kind = kKinds[bit];
      const auto value = raw[pos++];
      atr.interface_bytes.push_back({kind, index, value});
      if (kind == InterfaceKind::TD) {
        next_presence = value >> 4;
        if ((value & 0x0F) != 0) tck_required = true;
      }
    }
    presence = next_presence;
  }

  const std::size_t k = atr.t0 & 0x0F;
  need(k, "historical bytes");
  atr.historical.assign(raw.begin() + pos, raw.begin() + pos + k);
  pos += k;

  if (tck_required) {
    need(1, "TCK");
    atr.tck = raw[pos++];
    std::uint8_t check = 0;
    for (std::size_t i = 1; i < pos; ++i) check ^= raw[i];
    if (check != 0) {
      throw ApduError(ApduErrc::BadChecksum, "XOR over T0..TCK is not zero");
    }
  }

  if (pos != raw.size()) {
    throw ApduError(ApduErrc::TrailingGarbage,
                    std::to_string(raw.size() - pos) + " octets after ATR");
  }
  return atr;
}

Bytes serialize_atr(const Atr& atr) {
  Bytes out;
  out.push_back(atr.convention == Convention::Direct ? kDirectTs : kInverseTs);
  out.push_back(atr.t0);
  for (const auto& ib : atr.interface_bytes) out.push_back(ib.value);
  out.insert(out.end(), atr.historical.begin(), atr.historical.end());
  if (atr.tck) out.push_back(*atr.tck);
  return out;
}

}  // namespace simlink::apdu
