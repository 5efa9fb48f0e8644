#include "simlink/apdu/t0.hpp"

#include <fmt/format.h>

#include "simlink/apdu/error.hpp"

namespace simlink::apdu {

namespace {

constexpr std::uint8_t kNull = 0x60;

}  // namespace

ProcedureStep procedure_step(const ProcedureState& state, std::uint8_t byte) {
  if (state.status_seen) {
    throw ApduError(ApduErrc::ProtocolViolation,
                    fmt::format("procedure byte {:02X} after SW1", byte));
  }
  if (byte == state.ins_echo) return {state, procedure::TransferAll{}};
  if (byte == static_cast<std::uint8_t>(state.ins_echo ^ 0xFF)) {
    return {state, procedure::TransferOne{}};
  }
  if (byte == kNull) return {state, procedure::Waited{}};
  const auto high = byte & 0xF0;
  if (high == 0x60 || high == 0x90) {
    ProcedureState next = state;
    next.status_seen = true;
    return {next, procedure::StatusStarted{byte}};
  }
  throw ApduError(ApduErrc::ProtocolViolation,
                  fmt::format("procedure byte {:02X} matches no rule for INS {:02X}",
                              byte, state.ins_echo));
}

}  // namespace simlink::apdu
