#pragma once

#include <cstddef>
#include <vector>

#include "simlink/tracer/trace_event.hpp"

namespace simlink::tracer {

bool is_sms_fetch(const TraceEvent& event);
bool is_terminal_response(const TraceEvent& event);

// Indices of the SEND SHORT MESSAGE fetch responses that a later TERMINAL
// RESPONSE with the same command number acknowledges. Uses the decoded
// fields as they stand; see decode_trace to refresh them.
std::vector<std::size_t> detect_silent_sms(const std::vector<TraceEvent>& events);

// Copy of `events` with silent_sms set exactly on the detected ones.
std::vector<TraceEvent> flag_silent_sms(std::vector<TraceEvent> events);

}  // namespace simlink::tracer
