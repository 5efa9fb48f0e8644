#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <memory>
#include <random>

#include "simlink/apdu/apdu.hpp"
#include "simlink/vsim/virtual_sim.hpp"

namespace simlink::tunnel {
class ProbeTunnel;
}

namespace simlink::lab {

struct ResetResult {
  Bytes atr;
  std::int64_t latency_ms = 0;
};

struct Exchange {
  apdu::ResponseApdu response;
  std::int64_t latency_ms = 0;  // command out to response back
};

// The card as the modem front-end reaches it.
class CardLink {
 public:
  virtual ~CardLink() = default;
  virtual ResetResult reset() = 0;
  virtual Exchange transmit(const apdu::CommandApdu& cmd) = 0;
};

// A local card, no delay.
class DirectLink final : public CardLink {
 public:
  explicit DirectLink(vsim::VirtualSim& sim) : sim_(sim) {}
  ResetResult reset() override;
  Exchange transmit(const apdu::CommandApdu& cmd) override;

 private:
  vsim::VirtualSim& sim_;
};

struct DelayModel {
  std::int64_t base_rtt_ms = 0;
  std::int64_t jitter_ms = 0;  // uniform in [-jitter, +jitter], clamped at 0
  std::uint64_t seed = 0;
};

// A local card behind a simulated tunnel. Latencies are virtual: nothing
// sleeps.
class DelayedLink final : public CardLink {
 public:
  DelayedLink(vsim::VirtualSim& sim, DelayModel model);
  ResetResult reset() override;
  Exchange transmit(const apdu::CommandApdu& cmd) override;

 private:
  std::int64_t next_delay();

  vsim::VirtualSim& sim_;
  DelayModel model_;
  std::mt19937_64 rng_;
};

// The card at the far end of a real tunnel session; latency is measured on
// the steady clock.
class TunnelCardLink final : public CardLink {
 public:
  using TimePoint = std::chrono::steady_clock::time_point;

  explicit TunnelCardLink(tunnel::ProbeTunnel& tunnel) : tunnel_(tunnel) {}
  ResetResult reset() override;
  Exchange transmit(const apdu::CommandApdu& cmd) override;

  // When the first APDU response arrived, if one has.
  std::optional<TimePoint> first_response_at() const { return first_response_at_; }

 private:
  tunnel::ProbeTunnel& tunnel_;
  std::optional<TimePoint> first_response_at_;
};

}  // namespace simlink::lab
