#include "simlink/lab/link.hpp"

#include <algorithm>
#include <chrono>

#include "simlink/apdu/atr.hpp"
#include "simlink/tunnel/peer.hpp"

namespace simlink::lab {

namespace {

std::int64_t since_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() -
                                                               start)
      .count();
}

}  // namespace

ResetResult DirectLink::reset() { return {apdu::serialize_atr(sim_.reset()), 0}; }

Exchange DirectLink::transmit(const apdu::CommandApdu& cmd) { return {sim_.process(cmd), 0}; }

DelayedLink::DelayedLink(vsim::VirtualSim& sim, DelayModel model)
    : sim_(sim), model_(model), rng_(model.seed) {}

std::int64_t DelayedLink::next_delay() {
  if (model_.jitter_ms <= 0) return std::max<std::int64_t>(0, model_.base_rtt_ms);
  std::uniform_int_distribution<std::int64_t> jitter(-model_.jitter_ms, model_.jitter_ms);
  return std::max<std::int64_t>(0, model_.base_rtt_ms + jitter(rng_));
}

ResetResult DelayedLink::reset() {
  return {apdu::serialize_atr(sim_.reset()), next_delay()};
}

Exchange DelayedLink::transmit(const apdu::CommandApdu& cmd) {
  return {sim_.process(cmd), next_delay()};
}

ResetResult TunnelCardLink::reset() {
  const auto start = std::chrono::steady_clock::now();
  auto atr = tunnel_.reset();
  return {apdu::serialize_atr(atr), since_ms(start)};
}

Exchange TunnelCardLink::transmit(const apdu::CommandApdu& cmd) {
  const auto start = std::chrono::steady_clock::now();
  auto resp = tunnel_.transmit(cmd);
  if (!first_response_at_) first_response_at_ = std::chrono::steady_clock::now();
  return {std::move(resp), since_ms(start)};
}

}  // namespace simlink::lab
