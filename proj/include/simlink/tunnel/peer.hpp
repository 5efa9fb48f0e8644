#pragma once

#include <chrono>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>

#include "simlink/apdu/apdu.hpp"
#include "simlink/apdu/atr.hpp"
#include "simlink/net/stream.hpp"
#include "simlink/tunnel/frame.hpp"
#include "simlink/tunnel/session.hpp"

namespace simlink::tunnel {

using Clock = std::function<std::int64_t()>;

// Milliseconds on the steady clock.
Clock steady_clock_ms();

class TunnelError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Runs one session state machine over a byte stream. Single-threaded: all
// I/O happens inside the calling thread, keepalives included.
class TunnelPeer {
 public:
  TunnelPeer(std::unique_ptr<net::ByteStream> stream, SessionState initial,
             Clock clock = steady_clock_ms());

  void send(Request request);

  // Pumps the stream until a delivery is available or `timeout` passes.
  // End of stream without Close yields delivery::Closed{"end of stream"}.
  std::optional<Delivery> next_delivery(std::chrono::milliseconds timeout);

  const SessionState& state() const noexcept { return state_; }
  bool closed() const noexcept { return state_.phase == Phase::Closed; }

 private:
  void apply(const Event& event);
  void pump(std::chrono::milliseconds budget);

  std::unique_ptr<net::ByteStream> stream_;
  SessionState state_;
  Clock clock_;
  FrameReader reader_;
  std::deque<Delivery> inbox_;
  bool eof_ = false;
};

// Probe-side convenience wrapper: handshake, reset, and one-at-a-time APDU
// exchange. Throws TunnelError when the session closes underneath.
class ProbeTunnel {
 public:
  static constexpr std::chrono::milliseconds kDefaultTimeout{10000};

  ProbeTunnel(std::unique_ptr<net::ByteStream> stream, std::uint32_t session_id,
              Clock clock = steady_clock_ms());

  void handshake(const std::string& token,
                 std::chrono::milliseconds timeout = kDefaultTimeout);
  apdu::Atr reset(std::chrono::milliseconds timeout = kDefaultTimeout);
  apdu::ResponseApdu transmit(const apdu::CommandApdu& command,
                              std::chrono::milliseconds timeout = kDefaultTimeout);
  // Sends a keepalive and waits for its echo; returns the new RTT estimate.
  double ping(std::chrono::milliseconds timeout = kDefaultTimeout);
  void close();

  const SessionState& state() const noexcept { return peer_.state(); }

 private:
  void send(Request request);
  Delivery await(std::chrono::milliseconds timeout, const char* what);

  TunnelPeer peer_;
};

// Provider-side callbacks for serve_provider_session.
struct ProviderHandlers {
  std::function<bool(const std::string& token)> accept_token;
  std::function<Bytes()> on_reset;
  std::function<apdu::ResponseApdu(const apdu::CommandApdu&)> on_command;
  std::function<void(const delivery::Closed&)> on_closed;
};

// Serves one session until it closes or `should_stop` returns true.
void serve_provider_session(TunnelPeer& peer, const ProviderHandlers& handlers,
                            const std::function<bool()>& should_stop);

}  // namespace simlink::tunnel
