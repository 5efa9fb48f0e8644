#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "simlink/apdu/bytes.hpp"

namespace simlink::tracer {

enum class Direction { ModemToSim, SimToModem };

// "m2s" / "s2m"
std::string_view to_string(Direction dir) noexcept;

inline constexpr std::string_view kFlagSilentSms = "silent_sms";
inline constexpr std::string_view kFlagRewritten = "rewritten";

// What the decoder derives from the raw octets (plus session context).
struct Decoded {
  std::string ins_name = "UNKNOWN";
  std::optional<std::string> file_id;
  std::optional<std::string> status_class;
  std::optional<std::string> proactive_type;
  std::optional<int> command_number;

  bool operator==(const Decoded&) const = default;
};

struct TraceEvent {
  std::int64_t ts_ms = 0;
  Direction dir = Direction::ModemToSim;
  Bytes raw;  // as relayed: before rewriting for m2s, after for s2m
  Decoded decoded;
  std::uint32_t session = 0;
  std::set<std::string> flags;
  // Set on rewritten responses: the rule that fired and what the card said.
  std::optional<std::string> rule_id;
  std::optional<Bytes> original;

  bool has_flag(std::string_view flag) const { return flags.count(std::string(flag)) != 0; }

  bool operator==(const TraceEvent&) const = default;
};

// {"ts_ms","dir","raw_hex","decoded":{..},"session","flags"}; rule_id and
// original_hex ride inside "decoded".
nlohmann::json to_json(const TraceEvent& event);
TraceEvent trace_event_from_json(const nlohmann::json& j);

// Reads a JSON Lines trace; throws std::runtime_error on a bad line.
std::vector<TraceEvent> read_trace(const std::filesystem::path& path);

}  // namespace simlink::tracer
