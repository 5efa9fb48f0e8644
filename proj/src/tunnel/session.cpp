#include "simlink/tunnel/session.hpp"

#include <algorithm>

#include <fmt/format.h>

namespace simlink::tunnel {

namespace {

constexpr std::int64_t kNever = std::numeric_limits<std::int64_t>::min();

Bytes encode_ms(std::int64_t ms) {
  Bytes out(8);
  for (int i = 0; i < 8; ++i) {
    out[i] = static_cast<std::uint8_t>(static_cast<std::uint64_t>(ms) >> (56 - 8 * i));
  }
  return out;
}

std::int64_t decode_ms(ByteView raw) {
  std::uint64_t v = 0;
  for (auto b : raw) v = (v << 8) | b;
  return static_cast<std::int64_t>(v);
}

class Stepper {
 public:
  explicit Stepper(SessionState state) { result_.state = std::move(state); }

  SessionState& state() { return result_.state; }
  StepResult take() { return std::move(result_); }

  std::uint32_t emit(MessageType type, Bytes payload = {}) {
    auto& s = result_.state;
    const auto seq = s.next_tx_seq++;
    result_.frames.emplace_back(type, s.session_id, seq, std::move(payload));
    return seq;
  }

  void deliver(Delivery d) { result_.deliveries.push_back(std::move(d)); }

  void violate(Violation v, const std::string& detail) {
    const auto reason = fmt::format("{}: {}", to_string(v), detail);
    emit(MessageType::Error, Bytes(reason.begin(), reason.end()));
    auto& s = result_.state;
    s.phase = Phase::Closed;
    s.in_flight.reset();
    s.violation = v;
    result_.violations.push_back(v);
    deliver(delivery::Closed{reason, false});
  }

  void close_by_peer(std::string reason) {
    auto& s = result_.state;
    s.phase = Phase::Closed;
    s.in_flight.reset();
    deliver(delivery::Closed{std::move(reason), true});
  }

  void on_frame(const TunnelFrame& frame, std::int64_t now);
  void on_request(const Request& request, std::int64_t now);
  void on_timer(std::int64_t now);

 private:
  void unexpected(const TunnelFrame& frame) {
    violate(Violation::UnexpectedMessage,
            fmt::format("{} for {} in phase {}", to_string(frame.type()),
                        to_string(state().role), to_string(state().phase)));
  }

  bool established_as(Role role) const {
    return result_.state.role == role && result_.state.phase == Phase::Established;
  }

  StepResult result_;
};

void Stepper::on_frame(const TunnelFrame& frame, std::int64_t now) {
  auto& s = state();
  if (s.phase == Phase::Closed) return;

  // The provider learns the session id from the first frame it sees.
  if (s.role == Role::Provider && s.phase == Phase::AwaitHello && s.next_rx_seq == 0) {
    s.session_id = frame.session_id;
  }
  if (frame.session_id != s.session_id) {
    violate(Violation::SessionMismatch,
            fmt::format("frame for session {} on session {}", frame.session_id, s.session_id));
    return;
  }
  if (frame.seq != s.next_rx_seq) {
    violate(Violation::SeqGap,
            fmt::format("expected seq {}, got {}", s.next_rx_seq, frame.seq));
    return;
  }
  ++s.next_rx_seq;
  if (!is_known_message_type(frame.msg_type)) {
    violate(Violation::UnknownType, fmt::format("message type {:02X}", frame.msg_type));
    return;
  }

  switch (frame.type()) {
    case MessageType::Hello: {
      if (s.role != Role::Provider || s.phase != Phase::AwaitHello || s.hello_pending) {
        return unexpected(frame);
      }
      if (frame.payload.empty() ||
          frame.payload[0] != static_cast<std::uint8_t>(Role::Probe)) {
        violate(Violation::MalformedPayload, "Hello must start with the probe role");
        return;
      }
      s.hello_pending = true;
      deliver(delivery::HelloReceived{
          std::string(frame.payload.begin() + 1, frame.payload.end())});
      return;
    }
    case MessageType::HelloAck:
      if (s.role != Role::Probe || s.phase != Phase::AwaitHello || !s.hello_sent) {
        return unexpected(frame);
      }
      s.phase = Phase::Established;
      s.last_keepalive_ms = now;
      deliver(delivery::Established{});
      return;
    case MessageType::Reset:
      if (!established_as(Role::Provider)) return unexpected(frame);
      if (s.in_flight) {
        violate(Violation::AlternationBroken, "Reset while an exchange is in flight");
        return;
      }
      s.in_flight = InFlight{InFlight::Kind::Reset, frame.seq};
      deliver(delivery::ResetRequested{});
      return;
    case MessageType::AtrInd:
      if (!established_as(Role::Probe)) return unexpected(frame);
      if (!s.in_flight || s.in_flight->kind != InFlight::Kind::Reset) {
        violate(Violation::AlternationBroken, "AtrInd without a pending Reset");
        return;
      }
      s.in_flight.reset();
      deliver(delivery::AtrReceived{frame.payload});
      return;
    case MessageType::ApduReq: {
      if (!established_as(Role::Provider)) return unexpected(frame);
      if (s.in_flight) {
        violate(Violation::AlternationBroken, "ApduReq while an exchange is in flight");
        return;
      }
      std::optional<apdu::CommandApdu> cmd;
      try {
        cmd = apdu::decode_command(frame.payload);
      } catch (const apdu::ApduError& e) {
        violate(Violation::MalformedPayload, e.what());
        return;
      }
      s.in_flight = InFlight{InFlight::Kind::Apdu, frame.seq};
      deliver(delivery::CommandReceived{std::move(*cmd)});
      return;
    }
    case MessageType::ApduResp: {
      if (!established_as(Role::Probe)) return unexpected(frame);
      if (!s.in_flight || s.in_flight->kind != InFlight::Kind::Apdu) {
        violate(Violation::AlternationBroken, "ApduResp without a request in flight");
        return;
      }
      std::optional<apdu::ResponseApdu> resp;
      try {
        resp = apdu::decode_response(frame.payload);
      } catch (const apdu::ApduError& e) {
        violate(Violation::MalformedPayload, e.what());
        return;
      }
      s.in_flight.reset();
      deliver(delivery::ResponseReceived{std::move(*resp)});
      return;
    }
    case MessageType::Keepalive:
      if (s.phase != Phase::Established) return unexpected(frame);
      emit(MessageType::KeepaliveAck, frame.payload);
      return;
    case MessageType::KeepaliveAck:
      if (s.phase != Phase::Established) return unexpected(frame);
      if (frame.payload.size() != 8) {
        violate(Violation::MalformedPayload, "KeepaliveAck payload must be 8 octets");
        return;
      }
      s.rtt_samples.push_back({decode_ms(frame.payload), now});
      ++s.keepalive_acks;
      if (s.rtt_samples.size() > kRttWindow) {
        s.rtt_samples.erase(s.rtt_samples.begin());
      }
      return;
    case MessageType::Error:
      close_by_peer("peer error: " + std::string(frame.payload.begin(), frame.payload.end()));
      return;
    case MessageType::Close:
      close_by_peer("closed by peer");
      return;
  }
}

void Stepper::on_request(const Request& request, std::int64_t now) {
  auto& s = state();
  auto require = [](bool ok, const char* what) {
    if (!ok) throw SessionUsageError(what);
  };

  std::visit(
      [&](const auto& req) {
        using T = std::decay_t<decltype(req)>;
        if constexpr (std::is_same_v<T, request::Hello>) {
          require(s.role == Role::Probe && s.phase == Phase::AwaitHello && !s.hello_sent,
                  "Hello is sent once, by the probe, before establishment");
          Bytes payload{static_cast<std::uint8_t>(Role::Probe)};
          payload.insert(payload.end(), req.token.begin(), req.token.end());
          emit(MessageType::Hello, std::move(payload));
          s.hello_sent = true;
        } else if constexpr (std::is_same_v<T, request::AcceptHello>) {
          require(s.role == Role::Provider && s.hello_pending, "no Hello to accept");
          emit(MessageType::HelloAck);
          s.hello_pending = false;
          s.phase = Phase::Established;
          s.last_keepalive_ms = now;
          deliver(delivery::Established{});
        } else if constexpr (std::is_same_v<T, request::RejectHello>) {
          require(s.role == Role::Provider && s.hello_pending, "no Hello to reject");
          s.hello_pending = false;
          violate(Violation::BadToken, req.reason);
        } else if constexpr (std::is_same_v<T, request::Reset>) {
          require(established_as(Role::Probe) && !s.in_flight,
                  "Reset needs an established probe session with nothing in flight");
          s.in_flight = InFlight{InFlight::Kind::Reset, emit(MessageType::Reset)};
        } else if constexpr (std::is_same_v<T, request::Atr>) {
          require(established_as(Role::Provider) && s.in_flight &&
                      s.in_flight->kind == InFlight::Kind::Reset,
                  "ATR without a pending Reset");
          emit(MessageType::AtrInd, req.atr);
          s.in_flight.reset();
        } else if constexpr (std::is_same_v<T, request::Apdu>) {
          require(established_as(Role::Probe) && !s.in_flight,
                  "APDU needs an established probe session with nothing in flight");
          s.in_flight = InFlight{InFlight::Kind::Apdu,
                                 emit(MessageType::ApduReq, apdu::encode_command(req.command))};
        } else if constexpr (std::is_same_v<T, request::Response>) {
          require(established_as(Role::Provider) && s.in_flight &&
                      s.in_flight->kind == InFlight::Kind::Apdu,
                  "response without a command in flight");
          emit(MessageType::ApduResp, apdu::encode_response(req.response));
          s.in_flight.reset();
        } else if constexpr (std::is_same_v<T, request::Keepalive>) {
          require(s.phase == Phase::Established, "keepalive before establishment");
          emit(MessageType::Keepalive, encode_ms(now));
          s.last_keepalive_ms = now;
        } else if constexpr (std::is_same_v<T, request::Close>) {
          if (s.phase == Phase::Closed) return;
          emit(MessageType::Close);
          s.phase = Phase::Closed;
          s.in_flight.reset();
          deliver(delivery::Closed{"closed locally", false});
        }
      },
      request);
}

void Stepper::on_timer(std::int64_t now) {
  auto& s = state();
  if (s.phase != Phase::Established) return;
  if (s.last_keepalive_ms == kNever || now - s.last_keepalive_ms >= s.keepalive_interval_ms) {
    emit(MessageType::Keepalive, encode_ms(now));
    s.last_keepalive_ms = now;
  }
}

}  // namespace

std::string_view to_string(Role role) noexcept {
  return role == Role::Probe ? "Probe" : "Provider";
}

std::string_view to_string(Phase phase) noexcept {
  switch (phase) {
    case Phase::AwaitHello:
      return "AwaitHello";
    case Phase::Established:
      return "Established";
    case Phase::Closed:
      return "Closed";
  }
  return "Unknown";
}

std::string_view to_string(Violation v) noexcept {
  switch (v) {
    case Violation::AlternationBroken:
      return "AlternationBroken";
    case Violation::SeqGap:
      return "SeqGap";
    case Violation::UnknownType:
      return "UnknownType";
    case Violation::UnexpectedMessage:
      return "UnexpectedMessage";
    case Violation::SessionMismatch:
      return "SessionMismatch";
    case Violation::MalformedPayload:
      return "MalformedPayload";
    case Violation::BadToken:
      return "BadToken";
  }
  return "Unknown";
}

SessionState SessionState::probe(std::uint32_t session_id) {
  SessionState s;
  s.role = Role::Probe;
  s.session_id = session_id;
  return s;
}

SessionState SessionState::provider() {
  SessionState s;
  s.role = Role::Provider;
  return s;
}

StepResult session_step(SessionState state, const Event& event) {
  Stepper stepper(std::move(state));
  std::visit(
      [&](const auto& ev) {
        using T = std::decay_t<decltype(ev)>;
        if constexpr (std::is_same_v<T, event::FrameArrived>) {
          stepper.on_frame(ev.frame, ev.now_ms);
        } else if constexpr (std::is_same_v<T, event::SendRequested>) {
          stepper.on_request(ev.request, ev.now_ms);
        } else {
          stepper.on_timer(ev.now_ms);
        }
      },
      event);
  return stepper.take();
}

double rtt_estimate(const SessionState& state) {
  if (state.rtt_samples.empty()) throw NoSamples();
  const auto n = std::min(state.rtt_samples.size(), kRttWindow);
  std::vector<std::int64_t> rtts;
  for (auto it = state.rtt_samples.end() - static_cast<std::ptrdiff_t>(n);
       it != state.rtt_samples.end(); ++it) {
    rtts.push_back(it->echoed_at_ms - it->sent_at_ms);
  }
  std::sort(rtts.begin(), rtts.end());
  if (n % 2 == 1) return static_cast<double>(rtts[n / 2]);
  return (static_cast<double>(rtts[n / 2 - 1]) + static_cast<double>(rtts[n / 2])) / 2.0;
}

}  // namespace simlink::tunnel
