#include "simlink/tracer/silent_sms.hpp"

#include <algorithm>
#include <set>

namespace simlink::tracer {

bool is_sms_fetch(const TraceEvent& e) {
  return e.dir == Direction::SimToModem && e.decoded.ins_name == "FETCH" &&
         e.decoded.proactive_type == "SEND_SHORT_MESSAGE" && e.decoded.command_number.has_value();
}

bool is_terminal_response(const TraceEvent& e) {
  return e.dir == Direction::ModemToSim && e.decoded.ins_name == "TERMINAL_RESPONSE" &&
         e.decoded.command_number.has_value();
}

std::vector<std::size_t> detect_silent_sms(const std::vector<TraceEvent>& events) {
  std::set<int> acked_later;
  std::vector<std::size_t> flagged;
  for (std::size_t i = events.size(); i-- > 0;) {
    const auto& e = events[i];
    if (is_terminal_response(e)) {
      acked_later.insert(*e.decoded.command_number);
    } else if (is_sms_fetch(e) && acked_later.count(*e.decoded.command_number)) {
      flagged.push_back(i);
    }
  }
  std::reverse(flagged.begin(), flagged.end());
  return flagged;
}

std::vector<TraceEvent> flag_silent_sms(std::vector<TraceEvent> events) {
  for (auto& e : events) e.flags.erase(std::string(kFlagSilentSms));
  for (auto i : detect_silent_sms(events)) events[i].flags.insert(std::string(kFlagSilentSms));
  return events;
}

}  // namespace simlink::tracer
