#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "simlink/lab/front_end.hpp"
#include "simlink/lab/link.hpp"
#include "simlink/vsim/aka.hpp"
#include "simlink/vsim/profile.hpp"

namespace simlink::tracer {
class Tracer;
}

namespace simlink::lab {

namespace phase {
struct Reset {
  bool operator==(const Reset&) const = default;
};
struct ReadIccid {
  bool operator==(const ReadIccid&) const = default;
};
struct SelectUsim {
  bool operator==(const SelectUsim&) const = default;
};
struct ReadImsi {
  bool operator==(const ReadImsi&) const = default;
};
struct AuthenticateLoop {
  unsigned rounds = 1;
  bool operator==(const AuthenticateLoop&) const = default;
};
// `count` STATUS polls, `period_ms` of idle time between consecutive ones.
struct StatusPollLoop {
  std::int64_t period_ms = 1000;
  unsigned count = 3;
  bool operator==(const StatusPollLoop&) const = default;
};
// FETCH and TERMINAL RESPONSE while the card reports 91xx.
struct ProactiveFetchLoop {
  bool operator==(const ProactiveFetchLoop&) const = default;
};
}  // namespace phase

using Phase = std::variant<phase::Reset, phase::ReadIccid, phase::SelectUsim, phase::ReadImsi,
                           phase::AuthenticateLoop, phase::StatusPollLoop,
                           phase::ProactiveFetchLoop>;

std::string phase_name(const Phase& p);

// Reset, ReadIccid, SelectUsim, ReadImsi, AuthenticateLoop(1),
// StatusPollLoop(1000 ms, 3), ProactiveFetchLoop.
std::vector<Phase> full_script();

// "full", or a comma list of reset, iccid, usim, imsi, auth[:n],
// status[:period_ms[:count]], proactive. Throws std::invalid_argument.
std::vector<Phase> parse_script(const std::string& text);

struct ModemConfig {
  std::vector<Phase> script = full_script();
  std::int64_t waiting_time_ms = kDefaultWaitingTimeMs;
  StallPolicy stall;
  bool verify_aka = true;
  // The modem side's copy of the subscriber secrets and the last sequence
  // number it accepted.
  vsim::Block16 k{};
  vsim::Block16 op_salt{};
  std::uint64_t last_sqn = 0;
  std::uint64_t rand_seed = 1;

  static ModemConfig for_profile(const vsim::SimProfile& profile);
};

enum class FailureKind { TimeoutExpired, ProtocolViolation, AuthFailed, CardError };
std::string_view to_string(FailureKind kind) noexcept;

struct Failure {
  FailureKind kind;
  std::string phase;
  std::string detail;

  bool operator==(const Failure&) const = default;
};

struct SessionReport {
  std::vector<std::string> completed;
  bool aka_ok = false;
  std::int64_t elapsed_ms = 0;
  std::optional<Failure> failure;
  std::optional<std::string> iccid;
  std::optional<std::string> imsi;
  unsigned exchanges = 0;       // command/response pairs over the link
  unsigned proactive_fetched = 0;
  std::int64_t idle_ms = 0;

  bool ok() const noexcept { return !failure; }
};

nlohmann::json to_json(const SessionReport& report);

// Drives the script over `link`. Time is accounted, never slept: each
// exchange costs its link latency, the reset too, plus the idle periods of
// status polling. When given, `observer` records every exchange as the
// modem saw it.
SessionReport run_session(const ModemConfig& modem, CardLink& link,
                          tracer::Tracer* observer = nullptr);

}  // namespace simlink::lab
