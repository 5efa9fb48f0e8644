#include "simlink/vsim/identity.hpp"

#include <algorithm>
#include <stdexcept>

namespace simlink::vsim {

namespace {

constexpr std::size_t kIccidBodySize = 10;
constexpr std::size_t kImsiBodySize = 9;
constexpr std::uint8_t kImsiParity = 0x9;

// Packs nibbles low-first into octets, padding with F.
Bytes pack_swapped(const std::vector<std::uint8_t>& nibbles, std::size_t size) {
  Bytes out(size, 0xFF);
  for (std::size_t i = 0; i < nibbles.size(); ++i) {
    auto& octet = out[i / 2];
    if (i % 2 == 0) {
      octet = static_cast<std::uint8_t>((octet & 0xF0) | nibbles[i]);
    } else {
      octet = static_cast<std::uint8_t>((octet & 0x0F) | (nibbles[i] << 4));
    }
  }
  return out;
}

std::vector<std::uint8_t> unpack_swapped(ByteView body) {
  std::vector<std::uint8_t> nibbles;
  for (auto octet : body) {
    nibbles.push_back(octet & 0x0F);
    nibbles.push_back(octet >> 4);
  }
  return nibbles;
}

std::vector<std::uint8_t> digits_of(std::string_view digits) {
  std::vector<std::uint8_t> out;
  for (char c : digits) out.push_back(static_cast<std::uint8_t>(c - '0'));
  return out;
}

std::string digits_until_pad(const std::vector<std::uint8_t>& nibbles,
                             std::size_t from) {
  std::string out;
  for (std::size_t i = from; i < nibbles.size(); ++i) {
    if (nibbles[i] == 0xF) break;
    if (nibbles[i] > 9) throw std::invalid_argument("non-BCD nibble");
    out.push_back(static_cast<char>('0' + nibbles[i]));
  }
  return out;
}

}  // namespace

bool is_decimal(std::string_view digits) noexcept {
  return !digits.empty() && std::all_of(digits.begin(), digits.end(), [](char c) {
    return c >= '0' && c <= '9';
  });
}

bool luhn_valid(std::string_view digits) noexcept {
  if (digits.size() < 2 || !is_decimal(digits)) return false;
  int sum = 0;
  bool twice = false;
  for (auto it = digits.rbegin(); it != digits.rend(); ++it) {
    int d = *it - '0';
    if (twice) {
      d *= 2;
      if (d > 9) d -= 9;
    }
    sum += d;
    twice = !twice;
  }
  return sum % 10 == 0;
}

char luhn_check_digit(std::string_view payload) {
  if (!is_decimal(payload)) throw std::invalid_argument("not a decimal string");
  for (char c = '0'; c <= '9'; ++c) {
    std::string candidate(payload);
    candidate.push_back(c);
    if (luhn_valid(candidate)) return c;
  }
  throw std::logic_error("no Luhn digit");  // unreachable
}

Bytes encode_iccid(std::string_view iccid) {
  if (!is_decimal(iccid) || iccid.size() > 2 * kIccidBodySize) {
    throw std::invalid_argument("ICCID must be up to 20 decimal digits");
  }
  return pack_swapped(digits_of(iccid), kIccidBodySize);
}

std::string decode_iccid(ByteView body) {
  return digits_until_pad(unpack_swapped(body), 0);
}

Bytes encode_imsi(std::string_view imsi) {
  if (!is_decimal(imsi) || imsi.size() < 6 || imsi.size() > 15) {
    throw std::invalid_argument("IMSI must be 6..15 decimal digits");
  }
  std::vector<std::uint8_t> nibbles{kImsiParity};
  const auto digits = digits_of(imsi);
  nibbles.insert(nibbles.end(), digits.begin(), digits.end());
  Bytes data = pack_swapped(nibbles, kImsiBodySize - 1);
  Bytes out{static_cast<std::uint8_t>((nibbles.size() + 1) / 2)};
  out.insert(out.end(), data.begin(), data.end());
  return out;
}

std::string decode_imsi(ByteView body) {
  if (body.empty()) throw std::invalid_argument("empty EF_IMSI");
  const std::size_t len = body[0];
  if (len == 0 || len + 1 > body.size()) {
    throw std::invalid_argument("EF_IMSI length octet out of range");
  }
  const auto nibbles = unpack_swapped(body.subspan(1, len));
  if (nibbles.front() != kImsiParity) {
    throw std::invalid_argument("EF_IMSI parity nibble is not 9");
  }
  return digits_until_pad(nibbles, 1);
}

}  // namespace simlink::vsim
