#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

namespace simlink::apdu::ins {

inline constexpr std::uint8_t kSelect = 0xA4;
inline constexpr std::uint8_t kReadBinary = 0xB0;
inline constexpr std::uint8_t kReadRecord = 0xB2;
inline constexpr std::uint8_t kGetResponse = 0xC0;
inline constexpr std::uint8_t kStatus = 0xF2;
inline constexpr std::uint8_t kAuthenticate = 0x88;
inline constexpr std::uint8_t kFetch = 0x12;
inline constexpr std::uint8_t kTerminalResponse = 0x14;
inline constexpr std::uint8_t kEnvelope = 0xC2;

// SELECT, READ_BINARY, ... for the instructions above.
std::optional<std::string_view> name(std::uint8_t ins) noexcept;

}  // namespace simlink::apdu::ins
