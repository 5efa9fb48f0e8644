#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace simlink {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

// Uppercase hex without separators.
std::string to_hex(ByteView bytes);

// Accepts upper/lower case and ignores ASCII whitespace. Throws
// std::invalid_argument on odd digit counts or non-hex characters.
Bytes from_hex(std::string_view hex);

}  // namespace simlink
