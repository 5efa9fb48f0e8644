#include "simlink/tracer/rewrite.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

#include <fmt/format.h>

namespace simlink::tracer {

using nlohmann::json;

namespace {

std::uint8_t octet_from(const json& j, std::string_view field) {
  const auto raw = from_hex(j.get<std::string>());
  if (raw.size() != 1) throw std::invalid_argument(fmt::format("'{}' must be one octet", field));
  return raw[0];
}

std::optional<std::uint8_t> optional_octet(const json& j, const char* field) {
  if (!j.contains(field)) return std::nullopt;
  return octet_from(j.at(field), field);
}

Bytes optional_bytes(const json& j, const char* field) {
  return j.contains(field) ? from_hex(j.at(field).get<std::string>()) : Bytes{};
}

std::string octet_hex(std::uint8_t v) { return fmt::format("{:02X}", v); }

bool has_prefix(const Bytes& data, const Bytes& prefix) {
  return prefix.size() <= data.size() && std::equal(prefix.begin(), prefix.end(), data.begin());
}

RewriteRule rule_from_json(const json& j) {
  RewriteRule rule;
  rule.rule_id = j.at("rule_id").get<std::string>();
  if (rule.rule_id.empty()) throw std::invalid_argument("empty rule_id");

  const auto& m = j.at("match");
  const auto on = m.value("on", std::string("command"));
  if (on == "command") {
    CommandMatch c;
    c.cla = optional_octet(m, "cla");
    c.ins = optional_octet(m, "ins");
    c.p1 = optional_octet(m, "p1");
    c.p2 = optional_octet(m, "p2");
    if (m.contains("file_id")) {
      auto fid = from_hex(m["file_id"].get<std::string>());
      if (fid.empty()) throw std::invalid_argument("empty file_id");
      c.file_id = to_hex(fid);
    }
    c.data_prefix = optional_bytes(m, "data_prefix");
    rule.match = c;
  } else if (on == "response") {
    ResponseMatch r;
    r.sw1 = optional_octet(m, "sw1");
    r.sw2 = optional_octet(m, "sw2");
    r.data_prefix = optional_bytes(m, "data_prefix");
    rule.match = r;
  } else {
    throw std::invalid_argument(fmt::format("match.on must be command or response, not '{}'", on));
  }

  const auto& a = j.at("action");
  const auto type = a.at("type").get<std::string>();
  if (type == "ReplaceResponseData") {
    auto data = from_hex(a.at("data").get<std::string>());
    if (data.size() > apdu::ResponseApdu::kMaxData) {
      throw std::invalid_argument("replacement data over 256 octets");
    }
    rule.action = action::ReplaceResponseData{std::move(data)};
  } else if (type == "ReplaceStatus") {
    rule.action = action::ReplaceStatus{octet_from(a.at("sw1"), "sw1"), octet_from(a.at("sw2"), "sw2")};
  } else if (type == "Drop") {
    rule.action = action::Drop{};
  } else if (type == "PassThrough") {
    rule.action = action::PassThrough{};
  } else {
    throw std::invalid_argument(fmt::format("unknown action '{}'", type));
  }
  return rule;
}

}  // namespace

std::vector<RewriteRule> rules_from_json(const json& doc) {
  if (!doc.is_array()) throw std::invalid_argument("rules must be a JSON array");
  std::vector<RewriteRule> rules;
  try {
    for (const auto& j : doc) rules.push_back(rule_from_json(j));
  } catch (const json::exception& e) {
    throw std::invalid_argument(fmt::format("bad rule: {}", e.what()));
  }
  return rules;
}

json rules_to_json(const std::vector<RewriteRule>& rules) {
  json doc = json::array();
  for (const auto& rule : rules) {
    json m;
    if (const auto* c = std::get_if<CommandMatch>(&rule.match)) {
      m["on"] = "command";
      if (c->cla) m["cla"] = octet_hex(*c->cla);
      if (c->ins) m["ins"] = octet_hex(*c->ins);
      if (c->p1) m["p1"] = octet_hex(*c->p1);
      if (c->p2) m["p2"] = octet_hex(*c->p2);
      if (c->file_id) m["file_id"] = *c->file_id;
      if (!c->data_prefix.empty()) m["data_prefix"] = to_hex(c->data_prefix);
    } else {
      const auto& r = std::get<ResponseMatch>(rule.match);
      m["on"] = "response";
      if (r.sw1) m["sw1"] = octet_hex(*r.sw1);
      if (r.sw2) m["sw2"] = octet_hex(*r.sw2);
      if (!r.data_prefix.empty()) m["data_prefix"] = to_hex(r.data_prefix);
    }
    json a = std::visit(
        [](const auto& act) -> json {
          using T = std::decay_t<decltype(act)>;
          if constexpr (std::is_same_v<T, action::ReplaceResponseData>) {
            return {{"type", "ReplaceResponseData"}, {"data", to_hex(act.data)}};
          } else if constexpr (std::is_same_v<T, action::ReplaceStatus>) {
            return {{"type", "ReplaceStatus"}, {"sw1", octet_hex(act.sw1)}, {"sw2", octet_hex(act.sw2)}};
          } else if constexpr (std::is_same_v<T, action::Drop>) {
            return {{"type", "Drop"}};
          } else {
            return {{"type", "PassThrough"}};
          }
        },
        rule.action);
    doc.push_back({{"rule_id", rule.rule_id}, {"match", m}, {"action", a}});
  }
  return doc;
}

std::vector<RewriteRule> load_rules(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument(fmt::format("cannot open rules file {}", path.string()));
  auto doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) {
    throw std::invalid_argument(fmt::format("{} is not valid JSON", path.string()));
  }
  return rules_from_json(doc);
}

bool matches(const CommandMatch& m, const apdu::CommandApdu& cmd,
             const std::optional<std::string>& current_file) {
  if (m.cla && *m.cla != cmd.cla()) return false;
  if (m.ins && *m.ins != cmd.ins()) return false;
  if (m.p1 && *m.p1 != cmd.p1()) return false;
  if (m.p2 && *m.p2 != cmd.p2()) return false;
  if (m.file_id && m.file_id != current_file) return false;
  return has_prefix(cmd.data(), m.data_prefix);
}

bool matches(const ResponseMatch& m, const apdu::ResponseApdu& resp) {
  if (m.sw1 && *m.sw1 != resp.sw1()) return false;
  if (m.sw2 && *m.sw2 != resp.sw2()) return false;
  return has_prefix(resp.data(), m.data_prefix);
}

const RewriteRule* first_command_match(const std::vector<RewriteRule>& rules,
                                       const apdu::CommandApdu& cmd,
                                       const std::optional<std::string>& current_file) {
  for (const auto& rule : rules) {
    const auto* m = std::get_if<CommandMatch>(&rule.match);
    if (m && matches(*m, cmd, current_file)) return &rule;
  }
  return nullptr;
}

const RewriteRule* first_response_match(const std::vector<RewriteRule>& rules,
                                        const apdu::ResponseApdu& resp) {
  for (const auto& rule : rules) {
    const auto* m = std::get_if<ResponseMatch>(&rule.match);
    if (m && matches(*m, resp)) return &rule;
  }
  return nullptr;
}

apdu::ResponseApdu apply_action(const RewriteAction& act, const apdu::ResponseApdu& original) {
  return std::visit(
      [&](const auto& a) -> apdu::ResponseApdu {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, action::ReplaceResponseData>) {
          return {a.data, original.sw1(), original.sw2()};
        } else if constexpr (std::is_same_v<T, action::ReplaceStatus>) {
          return {original.data(), a.sw1, a.sw2};
        } else if constexpr (std::is_same_v<T, action::Drop>) {
          return {{}, 0x6D, 0x00};
        } else {
          return original;
        }
      },
      act);
}

std::pair<apdu::ResponseApdu, const RewriteRule*> apply_rewrites(
    const std::vector<RewriteRule>& rules, const apdu::CommandApdu& cmd,
    const std::optional<std::string>& current_file,
    const std::function<apdu::ResponseApdu(const apdu::CommandApdu&)>& card,
    std::optional<apdu::ResponseApdu>* card_response) {
  // A matching command rule decides the exchange, PassThrough included.
  if (const auto* rule = first_command_match(rules, cmd, current_file)) {
    if (std::holds_alternative<action::Drop>(rule->action)) {
      return {apdu::ResponseApdu({}, 0x6D, 0x00), rule};
    }
    auto original = card(cmd);
    if (card_response) *card_response = original;
    return {apply_action(rule->action, original), rule};
  }
  auto original = card(cmd);
  if (card_response) *card_response = original;
  if (const auto* rule = first_response_match(rules, original)) {
    return {apply_action(rule->action, original), rule};
  }
  return {original, nullptr};
}

}  // namespace simlink::tracer
