#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "simlink/apdu/bytes.hpp"
#include "simlink/apdu/error.hpp"

namespace simlink::apdu {

enum class Convention { Direct, Inverse };

enum class InterfaceKind : std::uint8_t { TA, TB, TC, TD };

struct InterfaceByte {
  InterfaceKind kind;
  int index;  // the i in TAi/TBi/TCi/TDi, starting at 1
  std::uint8_t value;

  bool operator==(const InterfaceByte&) const = default;
};

// Answer-to-reset as a structured value. serialize_atr(parse_atr(x)) == x
// for every accepted x.
struct Atr {
  static constexpr std::size_t kMaxLength = 33;

  Convention convention = Convention::Direct;
  std::uint8_t t0 = 0;
  std::vector<InterfaceByte> interface_bytes;
  Bytes historical;
  std::optional<std::uint8_t> tck;

  // Protocols announced by TD bytes; T=0 when none is given.
  std::vector<int> protocols() const;

  bool operator==(const Atr&) const = default;
};

// Errors: Truncated, UnknownConvention, BadChecksum, TrailingGarbage
// (octets after the structure), Oversize (structure longer than 33 octets).
Atr parse_atr(ByteView raw);

Bytes serialize_atr(const Atr& atr);

}  // namespace simlink::apdu
