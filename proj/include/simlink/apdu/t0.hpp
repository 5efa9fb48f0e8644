#pragma once

#include <cstdint>
#include <variant>

namespace simlink::apdu {

// Reader-side view of T=0 procedure bytes for one command.
struct ProcedureState {
  std::uint8_t ins_echo = 0;
  bool status_seen = false;

  static ProcedureState for_command(std::uint8_t ins) noexcept {
    return ProcedureState{ins, false};
  }
  bool operator==(const ProcedureState&) const = default;
};

namespace procedure {

struct TransferAll {
  bool operator==(const TransferAll&) const = default;
};
struct TransferOne {
  bool operator==(const TransferOne&) const = default;
};
// NULL byte; the reader restarts its work waiting time.
struct Waited {
  bool operator==(const Waited&) const = default;
};
// SW1 arrived. SW2 follows as a plain octet and is not a procedure byte.
struct StatusStarted {
  std::uint8_t sw1;
  bool operator==(const StatusStarted&) const = default;
};

}  // namespace procedure

using Transition = std::variant<procedure::TransferAll, procedure::TransferOne,
                                procedure::Waited, procedure::StatusStarted>;

struct ProcedureStep {
  ProcedureState next;
  Transition transition;
};

// Throws ApduError(ProtocolViolation) when the byte matches no rule or
// arrives after SW1.
ProcedureStep procedure_step(const ProcedureState& state, std::uint8_t byte);

}  // namespace simlink::apdu
