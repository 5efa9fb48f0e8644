#include "simlink/tracer/trace_event.hpp"

#include <fstream>
#include <stdexcept>

#include <fmt/format.h>

namespace simlink::tracer {

using nlohmann::json;

std::string_view to_string(Direction dir) noexcept {
  return dir == Direction::ModemToSim ? "m2s" : "s2m";
}

json to_json(const TraceEvent& event) {
  json decoded{{"ins_name", event.decoded.ins_name}};
  if (event.decoded.file_id) decoded["file_id"] = *event.decoded.file_id;
  if (event.decoded.status_class) decoded["status_class"] = *event.decoded.status_class;
  if (event.decoded.proactive_type) decoded["proactive_type"] = *event.decoded.proactive_type;
  if (event.decoded.command_number) decoded["command_number"] = *event.decoded.command_number;
  if (event.rule_id) decoded["rule_id"] = *event.rule_id;
  if (event.original) decoded["original_hex"] = to_hex(*event.original);
  return {{"ts_ms", event.ts_ms},
          {"dir", to_string(event.dir)},
          {"raw_hex", to_hex(event.raw)},
          {"decoded", decoded},
          {"session", event.session},
          {"flags", event.flags}};
}

TraceEvent trace_event_from_json(const json& j) {
  TraceEvent e;
  e.ts_ms = j.at("ts_ms").get<std::int64_t>();
  const auto dir = j.at("dir").get<std::string>();
  if (dir == "m2s") {
    e.dir = Direction::ModemToSim;
  } else if (dir == "s2m") {
    e.dir = Direction::SimToModem;
  } else {
    throw std::invalid_argument(fmt::format("bad dir '{}'", dir));
  }
  e.raw = from_hex(j.at("raw_hex").get<std::string>());
  const auto& d = j.at("decoded");
  e.decoded.ins_name = d.at("ins_name").get<std::string>();
  if (d.contains("file_id")) e.decoded.file_id = d["file_id"].get<std::string>();
  if (d.contains("status_class")) e.decoded.status_class = d["status_class"].get<std::string>();
  if (d.contains("proactive_type")) {
    e.decoded.proactive_type = d["proactive_type"].get<std::string>();
  }
  if (d.contains("command_number")) e.decoded.command_number = d["command_number"].get<int>();
  if (d.contains("rule_id")) e.rule_id = d["rule_id"].get<std::string>();
  if (d.contains("original_hex")) e.original = from_hex(d["original_hex"].get<std::string>());
  e.session = j.at("session").get<std::uint32_t>();
  e.flags = j.at("flags").get<std::set<std::string>>();
  return e;
}

std::vector<TraceEvent> read_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(fmt::format("cannot open trace {}", path.string()));
  std::vector<TraceEvent> events;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      events.push_back(trace_event_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw std::runtime_error(
          fmt::format("{}:{}: bad trace event: {}", path.string(), line_no, e.what()));
    }
  }
  return events;
}

}  // namespace simlink::tracer
