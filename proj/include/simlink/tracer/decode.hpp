#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "simlink/apdu/bytes.hpp"
#include "simlink/tracer/trace_event.hpp"

namespace simlink::tracer {

// Per-session decoder state: which command a response answers and which
// file is selected. A SELECT takes effect once its response succeeds.
struct DecodeContext {
  std::optional<std::uint8_t> last_ins;
  std::optional<std::string> pending_select;
  std::optional<std::string> current_file;
};

// Never throws; undecodable octets give ins_name "UNKNOWN".
Decoded decode_command_event(ByteView raw, DecodeContext& ctx);
Decoded decode_response_event(ByteView raw, DecodeContext& ctx);

Decoded decode_event(Direction dir, ByteView raw, DecodeContext& ctx);

// Re-decodes every event from its raw octets, in order.
std::vector<Decoded> decode_trace(const std::vector<TraceEvent>& events);

}  // namespace simlink::tracer
