#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "simlink/apdu/apdu.hpp"

namespace simlink::tracer {

// Matches a command; file_id is the file selected when it is sent.
struct CommandMatch {
  std::optional<std::uint8_t> cla;
  std::optional<std::uint8_t> ins;
  std::optional<std::uint8_t> p1;
  std::optional<std::uint8_t> p2;
  std::optional<std::string> file_id;  // "2FE2"
  Bytes data_prefix;

  bool operator==(const CommandMatch&) const = default;
};

struct ResponseMatch {
  std::optional<std::uint8_t> sw1;
  std::optional<std::uint8_t> sw2;
  Bytes data_prefix;

  bool operator==(const ResponseMatch&) const = default;
};

namespace action {
struct ReplaceResponseData {
  Bytes data;
  bool operator==(const ReplaceResponseData&) const = default;
};
struct ReplaceStatus {
  std::uint8_t sw1 = 0x90;
  std::uint8_t sw2 = 0x00;
  bool operator==(const ReplaceStatus&) const = default;
};
// The command never reaches the card; the modem gets 6D00.
struct Drop {
  bool operator==(const Drop&) const = default;
};
struct PassThrough {
  bool operator==(const PassThrough&) const = default;
};
}  // namespace action

using RewriteAction = std::variant<action::ReplaceResponseData, action::ReplaceStatus,
                                   action::Drop, action::PassThrough>;

struct RewriteRule {
  std::string rule_id;
  std::variant<CommandMatch, ResponseMatch> match;
  RewriteAction action;

  bool operator==(const RewriteRule&) const = default;
};

// Rules file: JSON array of
//   {"rule_id":"..","match":{"on":"command","ins":"B0","file_id":"2FE2",..},
//    "action":{"type":"ReplaceResponseData","data":"98.."}}
// Octet fields are hex strings. Throws std::invalid_argument.
std::vector<RewriteRule> rules_from_json(const nlohmann::json& doc);
nlohmann::json rules_to_json(const std::vector<RewriteRule>& rules);
std::vector<RewriteRule> load_rules(const std::filesystem::path& path);

bool matches(const CommandMatch& m, const apdu::CommandApdu& cmd,
             const std::optional<std::string>& current_file);
bool matches(const ResponseMatch& m, const apdu::ResponseApdu& resp);

// First command rule matching `cmd`, if any.
const RewriteRule* first_command_match(const std::vector<RewriteRule>& rules,
                                       const apdu::CommandApdu& cmd,
                                       const std::optional<std::string>& current_file);
const RewriteRule* first_response_match(const std::vector<RewriteRule>& rules,
                                        const apdu::ResponseApdu& resp);

// Applies `action` to what the card answered.
apdu::ResponseApdu apply_action(const RewriteAction& action, const apdu::ResponseApdu& original);

// The response the modem should see for `cmd`. `card` is called at most
// once, and not at all when a command rule drops it; its answer is stored
// in `card_response` when given. Returns the rule that decided the
// exchange, if any.
std::pair<apdu::ResponseApdu, const RewriteRule*> apply_rewrites(
    const std::vector<RewriteRule>& rules, const apdu::CommandApdu& cmd,
    const std::optional<std::string>& current_file,
    const std::function<apdu::ResponseApdu(const apdu::CommandApdu&)>& card,
    std::optional<apdu::ResponseApdu>* card_response = nullptr);

}  // namespace simlink::tracer
