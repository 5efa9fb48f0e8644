#include "simlink/tunnel/peer.hpp"

#include <array>

#include <fmt/format.h>

namespace simlink::tunnel {

namespace {

using std::chrono::milliseconds;
using SteadyClock = std::chrono::steady_clock;

constexpr milliseconds kTick{50};

}  // namespace

Clock steady_clock_ms() {
  return [] {
    return std::chrono::duration_cast<milliseconds>(SteadyClock::now().time_since_epoch())
        .count();
  };
}

TunnelPeer::TunnelPeer(std::unique_ptr<net::ByteStream> stream, SessionState initial,
                       Clock clock)
    : stream_(std::move(stream)), state_(std::move(initial)), clock_(std::move(clock)) {}

void TunnelPeer::send(Request request) {
  if (closed() && std::holds_alternative<request::Close>(request)) return;
  apply(event::SendRequested{std::move(request), clock_()});
}

void TunnelPeer::apply(const Event& event) {
  auto result = session_step(state_, event);
  const bool was_closed = closed();
  state_ = std::move(result.state);
  for (auto& d : result.deliveries) inbox_.push_back(std::move(d));

  if (eof_) return;
  try {
    for (const auto& frame : result.frames) stream_->write_all(frame_encode(frame));
    if (!was_closed && closed()) stream_->shutdown();
  } catch (const net::TransportError& e) {
    eof_ = true;
    if (!closed()) {
      state_.phase = Phase::Closed;
      state_.in_flight.reset();
      inbox_.push_back(delivery::Closed{fmt::format("transport: {}", e.what()), true});
    }
  }
}

void TunnelPeer::pump(milliseconds budget) {
  if (eof_) return;
  std::array<std::uint8_t, 4096> buf{};
  std::optional<std::size_t> n;
  try {
    n = stream_->read_some(buf, budget);
  } catch (const net::TransportError& e) {
    n = 0;
  }
  if (n && *n == 0) {
    eof_ = true;
    if (!closed()) {
      state_.phase = Phase::Closed;
      state_.in_flight.reset();
      inbox_.push_back(delivery::Closed{"end of stream", true});
    }
    return;
  }
  if (n) {
    std::vector<TunnelFrame> frames;
    try {
      frames = reader_.feed(ByteView(buf.data(), *n));
    } catch (const FrameError& e) {
      // The byte stream cannot be resynchronised after a framing error.
      if (!closed()) {
        state_.phase = Phase::Closed;
        state_.in_flight.reset();
        inbox_.push_back(delivery::Closed{fmt::format("framing: {}", e.what()), false});
      }
      eof_ = true;
      stream_->shutdown();
      return;
    }
    for (auto& f : frames) apply(event::FrameArrived{std::move(f), clock_()});
  }
  apply(event::TimerFired{clock_()});
}

std::optional<Delivery> TunnelPeer::next_delivery(milliseconds timeout) {
  const auto deadline = SteadyClock::now() + timeout;
  while (true) {
    if (!inbox_.empty()) {
      auto d = std::move(inbox_.front());
      inbox_.pop_front();
      return d;
    }
    if (eof_ || closed()) return std::nullopt;
    const auto remaining =
        std::chrono::duration_cast<milliseconds>(deadline - SteadyClock::now());
    if (remaining.count() <= 0) {
      pump(milliseconds{0});
      if (inbox_.empty()) return std::nullopt;
      continue;
    }
    pump(std::min(remaining, kTick));
  }
}

ProbeTunnel::ProbeTunnel(std::unique_ptr<net::ByteStream> stream, std::uint32_t session_id,
                         Clock clock)
    : peer_(std::move(stream), SessionState::probe(session_id), std::move(clock)) {}

Delivery ProbeTunnel::await(milliseconds timeout, const char* what) {
  auto d = peer_.next_delivery(timeout);
  if (!d) {
    if (peer_.closed()) throw TunnelError(fmt::format("session closed waiting for {}", what));
    throw TunnelError(fmt::format("timed out waiting for {}", what));
  }
  if (auto* c = std::get_if<delivery::Closed>(&*d)) {
    throw TunnelError(fmt::format("session closed waiting for {}: {}", what, c->reason));
  }
  return std::move(*d);
}

void ProbeTunnel::handshake(const std::string& token, milliseconds timeout) {
  send(request::Hello{token});
  auto d = await(timeout, "HelloAck");
  if (!std::holds_alternative<delivery::Established>(d)) {
    throw TunnelError("unexpected delivery during handshake");
  }
}

void ProbeTunnel::send(Request request) {
  if (peer_.closed()) throw TunnelError("session is closed");
  peer_.send(std::move(request));
}

apdu::Atr ProbeTunnel::reset(milliseconds timeout) {
  send(request::Reset{});
  auto d = await(timeout, "ATR");
  auto* atr = std::get_if<delivery::AtrReceived>(&d);
  if (!atr) throw TunnelError("unexpected delivery waiting for ATR");
  try {
    return apdu::parse_atr(atr->atr);
  } catch (const apdu::ApduError& e) {
    throw TunnelError(fmt::format("provider sent a bad ATR: {}", e.what()));
  }
}

apdu::ResponseApdu ProbeTunnel::transmit(const apdu::CommandApdu& command,
                                         milliseconds timeout) {
  send(request::Apdu{command});
  auto d = await(timeout, "APDU response");
  auto* resp = std::get_if<delivery::ResponseReceived>(&d);
  if (!resp) throw TunnelError("unexpected delivery waiting for APDU response");
  return std::move(resp->response);
}

double ProbeTunnel::ping(milliseconds timeout) {
  const auto acks = peer_.state().keepalive_acks;
  send(request::Keepalive{});
  const auto deadline = SteadyClock::now() + timeout;
  while (peer_.state().keepalive_acks == acks) {
    if (SteadyClock::now() >= deadline) throw TunnelError("timed out waiting for KeepaliveAck");
    if (auto d = peer_.next_delivery(milliseconds{10})) {
      if (auto* c = std::get_if<delivery::Closed>(&*d)) {
        throw TunnelError(fmt::format("session closed during ping: {}", c->reason));
      }
    } else if (peer_.closed()) {
      throw TunnelError("session closed during ping");
    }
  }
  return rtt_estimate(peer_.state());
}

void ProbeTunnel::close() { peer_.send(request::Close{}); }

void serve_provider_session(TunnelPeer& peer, const ProviderHandlers& handlers,
                            const std::function<bool()>& should_stop) {
  auto handle = [&](Delivery& d) {
    std::visit(
        [&](auto& item) {
          using T = std::decay_t<decltype(item)>;
          if constexpr (std::is_same_v<T, delivery::HelloReceived>) {
            if (handlers.accept_token && handlers.accept_token(item.token)) {
              peer.send(request::AcceptHello{});
            } else {
              peer.send(request::RejectHello{"lease token rejected"});
            }
          } else if constexpr (std::is_same_v<T, delivery::ResetRequested>) {
            peer.send(request::Atr{handlers.on_reset()});
          } else if constexpr (std::is_same_v<T, delivery::CommandReceived>) {
            peer.send(request::Response{handlers.on_command(item.command)});
          } else if constexpr (std::is_same_v<T, delivery::Closed>) {
            if (handlers.on_closed) handlers.on_closed(item);
          }
        },
        d);
  };

  while (true) {
    if (should_stop && should_stop()) {
      peer.send(request::Close{});
      while (auto d = peer.next_delivery(milliseconds{0})) handle(*d);
      return;
    }
    auto d = peer.next_delivery(milliseconds{100});
    if (!d) {
      if (peer.closed()) return;
      continue;
    }
    handle(*d);
  }
}

}  // namespace simlink::tunnel
