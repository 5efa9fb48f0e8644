#include "simlink/lab/front_end.hpp"

#include "simlink/apdu/t0.hpp"

namespace simlink::lab {

std::vector<TimedByte> t0_timeline(const apdu::CommandApdu& cmd, const apdu::ResponseApdu& resp,
                                   std::int64_t latency_ms, const StallPolicy& stall) {
  std::vector<TimedByte> line;
  // The front-end acknowledges locally so it holds the whole command before
  // tunneling it.
  if (!cmd.data().empty()) line.push_back({0, cmd.ins()});
  if (stall.enabled && stall.null_interval_ms > 0) {
    for (std::int64_t t = stall.null_interval_ms; t < latency_ms; t += stall.null_interval_ms) {
      line.push_back({t, kNullByte});
    }
  }
  if (!resp.data().empty()) line.push_back({latency_ms, cmd.ins()});
  line.push_back({latency_ms, resp.sw1()});
  line.push_back({latency_ms, resp.sw2()});
  return line;
}

WalkOutcome walk_t0_timeline(std::uint8_t ins, const std::vector<TimedByte>& timeline,
                             std::int64_t waiting_time_ms) {
  WalkOutcome out;
  auto state = apdu::ProcedureState::for_command(ins);
  std::int64_t last = 0;
  for (const auto& b : timeline) {
    if (b.at_ms - last > waiting_time_ms) {
      out.elapsed_ms = last + waiting_time_ms;
      return out;
    }
    last = b.at_ms;
    if (state.status_seen) {
      out.sw2 = b.value;
      out.completed = true;
      out.elapsed_ms = last;
      return out;
    }
    auto step = apdu::procedure_step(state, b.value);
    state = step.next;
    if (const auto* s = std::get_if<apdu::procedure::StatusStarted>(&step.transition)) {
      out.sw1 = s->sw1;
    }
  }
  // Nothing more is coming; the modem waits out its budget.
  out.elapsed_ms = last + waiting_time_ms;
  return out;
}

}  // namespace simlink::lab
