#pragma once

#include <string>
#include <string_view>

#include "simlink/apdu/bytes.hpp"

namespace simlink::vsim {

bool is_decimal(std::string_view digits) noexcept;

// Luhn check over every digit, the last one being the check digit.
bool luhn_valid(std::string_view digits) noexcept;

// Check digit to append to `payload`. Requires a decimal string.
char luhn_check_digit(std::string_view payload);

// EF_ICCID body: 10 octets, nibble-swapped BCD, padded with F.
Bytes encode_iccid(std::string_view iccid);
std::string decode_iccid(ByteView body);

// EF_IMSI body: length octet, parity nibble 9, nibble-swapped BCD digits,
// padded with F to 9 octets.
Bytes encode_imsi(std::string_view imsi);
std::string decode_imsi(ByteView body);

}  // namespace simlink::vsim
