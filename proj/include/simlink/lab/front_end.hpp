#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "simlink/apdu/apdu.hpp"

namespace simlink::lab {

inline constexpr std::int64_t kDefaultWaitingTimeMs = 300;
inline constexpr std::int64_t kDefaultNullIntervalMs = 100;
inline constexpr std::uint8_t kNullByte = 0x60;

struct StallPolicy {
  bool enabled = true;
  std::int64_t null_interval_ms = kDefaultNullIntervalMs;
};

struct TimedByte {
  std::int64_t at_ms = 0;
  std::uint8_t value = 0;

  bool operator==(const TimedByte&) const = default;
};

// What the probe front-end puts on the T=0 line toward the modem for one
// exchange whose tunneled answer takes `latency_ms`: an immediate ACK if
// the command carries data, NULLs every null interval while waiting (when
// stalling), then ACK and data if the response has any, SW1, SW2. Data
// octets themselves are not listed.
std::vector<TimedByte> t0_timeline(const apdu::CommandApdu& cmd, const apdu::ResponseApdu& resp,
                                   std::int64_t latency_ms, const StallPolicy& stall);

struct WalkOutcome {
  bool completed = false;
  std::int64_t elapsed_ms = 0;  // to SW2, or to the moment the modem gave up
  std::optional<std::uint8_t> sw1;
  std::optional<std::uint8_t> sw2;
};

// The modem's side: runs procedure_step over the timeline and gives up when
// more than `waiting_time_ms` passes without a byte. Throws ApduError
// (ProtocolViolation) on an illegal procedure byte.
WalkOutcome walk_t0_timeline(std::uint8_t ins, const std::vector<TimedByte>& timeline,
                             std::int64_t waiting_time_ms);

}  // namespace simlink::lab
