#pragma once

#include <cstdint>
#include <string>
#include <variant>

namespace simlink::apdu {

namespace status {

struct Ok {
  bool operator==(const Ok&) const = default;
};
// 61xx: xx octets can be fetched with GET RESPONSE (00 means 256).
struct MoreDataAvailable {
  std::uint16_t count;
  bool operator==(const MoreDataAvailable&) const = default;
};
// 6Cxx: repeat the command with Le = xx (00 means 256).
struct WrongLe {
  std::uint16_t correct_le;
  bool operator==(const WrongLe&) const = default;
};
// 91xx: a proactive command of xx octets is waiting for FETCH.
struct ProactivePending {
  std::uint8_t count;
  bool operator==(const ProactivePending&) const = default;
};
struct Error {
  std::uint8_t family;
  std::uint8_t sw1;
  std::uint8_t sw2;
  bool operator==(const Error&) const = default;
};

}  // namespace status

using StatusClass = std::variant<status::Ok, status::MoreDataAvailable,
                                 status::WrongLe, status::ProactivePending,
                                 status::Error>;

StatusClass classify_status(std::uint8_t sw1, std::uint8_t sw2) noexcept;

// True for 9000 and 91xx, the two "command completed" outcomes.
bool is_success(const StatusClass& status) noexcept;

// "Ok", "MoreDataAvailable(16)", "Error(6A82)", ...
std::string describe(const StatusClass& status);

}  // namespace simlink::apdu
