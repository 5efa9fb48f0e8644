#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "simlink/apdu/apdu.hpp"
#include "simlink/tunnel/frame.hpp"

namespace simlink::tunnel {

enum class Role : std::uint8_t { Probe = 0x01, Provider = 0x02 };
enum class Phase { AwaitHello, Established, Closed };

enum class Violation {
  AlternationBroken,
  SeqGap,
  UnknownType,
  UnexpectedMessage,
  SessionMismatch,
  MalformedPayload,
  BadToken,
};

std::string_view to_string(Role role) noexcept;
std::string_view to_string(Phase phase) noexcept;
std::string_view to_string(Violation violation) noexcept;

inline constexpr std::int64_t kDefaultKeepaliveMs = 1000;
inline constexpr std::size_t kRttWindow = 16;

struct RttSample {
  std::int64_t sent_at_ms = 0;
  std::int64_t echoed_at_ms = 0;

  bool operator==(const RttSample&) const = default;
};

// The exchange currently awaiting its answer. Both ends track it: the probe
// for what it sent, the provider for what it received.
struct InFlight {
  enum class Kind { Reset, Apdu } kind = Kind::Apdu;
  std::uint32_t seq = 0;

  bool operator==(const InFlight&) const = default;
};

struct SessionState {
  Role role = Role::Probe;
  Phase phase = Phase::AwaitHello;
  std::uint32_t session_id = 0;
  std::uint32_t next_tx_seq = 0;
  std::uint32_t next_rx_seq = 0;
  bool hello_sent = false;
  bool hello_pending = false;  // provider: Hello seen, verdict outstanding
  std::optional<InFlight> in_flight;
  std::vector<RttSample> rtt_samples;  // most recent kRttWindow only
  std::uint64_t keepalive_acks = 0;
  std::int64_t keepalive_interval_ms = kDefaultKeepaliveMs;
  std::int64_t last_keepalive_ms = std::numeric_limits<std::int64_t>::min();
  std::optional<Violation> violation;

  static SessionState probe(std::uint32_t session_id);
  static SessionState provider();

  bool operator==(const SessionState&) const = default;
};

// Requests from the local application.
namespace request {
struct Hello {
  std::string token;
};
struct AcceptHello {};
struct RejectHello {
  std::string reason;
};
struct Reset {};
struct Atr {
  Bytes atr;
};
struct Apdu {
  apdu::CommandApdu command;
};
struct Response {
  apdu::ResponseApdu response;
};
struct Keepalive {};
struct Close {};
}  // namespace request

using Request = std::variant<request::Hello, request::AcceptHello,
                             request::RejectHello, request::Reset, request::Atr,
                             request::Apdu, request::Response,
                             request::Keepalive, request::Close>;

// What the session hands to the local application.
namespace delivery {
struct HelloReceived {
  std::string token;
  bool operator==(const HelloReceived&) const = default;
};
struct Established {
  bool operator==(const Established&) const = default;
};
struct ResetRequested {
  bool operator==(const ResetRequested&) const = default;
};
struct AtrReceived {
  Bytes atr;
  bool operator==(const AtrReceived&) const = default;
};
struct CommandReceived {
  apdu::CommandApdu command;
  bool operator==(const CommandReceived&) const = default;
};
struct ResponseReceived {
  apdu::ResponseApdu response;
  bool operator==(const ResponseReceived&) const = default;
};
struct Closed {
  std::string reason;
  bool by_peer = false;
  bool operator==(const Closed&) const = default;
};
}  // namespace delivery

using Delivery = std::variant<delivery::HelloReceived, delivery::Established,
                              delivery::ResetRequested, delivery::AtrReceived,
                              delivery::CommandReceived, delivery::ResponseReceived,
                              delivery::Closed>;

namespace event {
struct FrameArrived {
  TunnelFrame frame;
  std::int64_t now_ms = 0;
};
struct SendRequested {
  Request request;
  std::int64_t now_ms = 0;
};
struct TimerFired {
  std::int64_t now_ms = 0;
};
}  // namespace event

using Event = std::variant<event::FrameArrived, event::SendRequested, event::TimerFired>;

struct StepResult {
  SessionState state;
  std::vector<TunnelFrame> frames;
  std::vector<Delivery> deliveries;
  std::vector<Violation> violations;
};

// Local misuse (e.g. a second APDU while one is in flight). The session is
// left unchanged.
class SessionUsageError : public std::logic_error {
  using std::logic_error::logic_error;
};

class NoSamples : public std::runtime_error {
 public:
  NoSamples() : std::runtime_error("NoSamples: no completed keepalive round trip") {}
};

// Pure transition function. A violation by the peer emits an Error frame,
// closes the session and is reported in `violations`.
StepResult session_step(SessionState state, const Event& event);

// Median round trip of the last (up to) 16 keepalive samples, in ms.
double rtt_estimate(const SessionState& state);

}  // namespace simlink::tunnel
