#include "simlink/vsim/profile.hpp"

#include <fstream>

#include <fmt/format.h>

#include "simlink/vsim/identity.hpp"

namespace simlink::vsim {

namespace {

Block16 block_from_hex(const std::string& hex, const char* field) {
  Bytes raw;
  try {
    raw = from_hex(hex);
  } catch (const std::invalid_argument& e) {
    throw ProfileError(fmt::format("{}: {}", field, e.what()));
  }
  if (raw.size() != 16) {
    throw ProfileError(fmt::format("{} must be 16 octets, got {}", field, raw.size()));
  }
  Block16 out{};
  std::copy(raw.begin(), raw.end(), out.begin());
  return out;
}

}  // namespace

void SimProfile::validate() const {
  if (!is_decimal(iccid) || iccid.size() < 19 || iccid.size() > 20) {
    throw ProfileError("iccid must be 19 or 20 decimal digits");
  }
  if (!luhn_valid(iccid)) throw ProfileError("iccid fails the Luhn check");
  if (!is_decimal(imsi) || imsi.size() < 6 || imsi.size() > 15) {
    throw ProfileError("imsi must be 6..15 decimal digits");
  }
  if (sqn > kSqnMask) throw ProfileError("sqn exceeds 48 bits");
  try {
    if (apdu::parse_atr(apdu::serialize_atr(atr)) != atr) {
      throw ProfileError("atr does not round-trip");
    }
  } catch (const apdu::ApduError& e) {
    throw ProfileError(fmt::format("atr: {}", e.what()));
  }
  for (const auto& p : proactive) {
    if (p.payload.size() > kMaxProactivePayload) {
      throw ProfileError(fmt::format("proactive payload of {} octets exceeds {}",
                                     p.payload.size(), kMaxProactivePayload));
    }
  }
}

apdu::Atr demo_atr() {
  // 3B 9F 96 80 1F C7 | 80 31 E0 73 FE 21 1B 63 3A 20 4E 83 00 90 00 | 93
  static const Bytes raw = from_hex("3B9F96801FC78031E073FE211B633A204E8300900093");
  return apdu::parse_atr(raw);
}

SimProfile demo_profile() {
  SimProfile p;
  p.iccid = "8943012345678901230";
  p.imsi = "232010123456789";
  p.k = block_from_hex("000102030405060708090A0B0C0D0E0F", "k");
  p.op_salt = block_from_hex("63BFA50EE6523365FF14C1F45F88737D", "op_salt");
  p.sqn = 0x20;
  p.atr = demo_atr();
  // SMS-SUBMIT to the operator's short code with an empty user data part.
  p.proactive.push_back(
      {ProactiveKind::SendShortMessage, from_hex("0100048121430000")});
  return p;
}

SimProfile profile_from_json(const nlohmann::json& doc) {
  SimProfile p;
  try {
    p.iccid = doc.at("iccid").get<std::string>();
    p.imsi = doc.at("imsi").get<std::string>();
    p.k = block_from_hex(doc.at("k_hex").get<std::string>(), "k_hex");
    p.op_salt = block_from_hex(doc.at("op_salt_hex").get<std::string>(), "op_salt_hex");
    p.sqn = doc.value("sqn", std::uint64_t{0});
    p.atr = doc.contains("atr_hex")
                ? apdu::parse_atr(from_hex(doc.at("atr_hex").get<std::string>()))
                : demo_atr();
    p.proactive_trigger = doc.value("proactive_trigger", ProactiveQueue::kDefaultTrigger);
    for (const auto& entry : doc.value("proactive", nlohmann::json::array())) {
      const auto name = entry.at("kind").get<std::string>();
      const auto kind = proactive_kind_from_string(name);
      if (!kind) throw ProfileError("unknown proactive kind " + name);
      p.proactive.push_back(
          {*kind, from_hex(entry.value("payload_hex", std::string{}))});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ProfileError(fmt::format("profile JSON: {}", e.what()));
  } catch (const apdu::ApduError& e) {
    throw ProfileError(fmt::format("atr_hex: {}", e.what()));
  } catch (const std::invalid_argument& e) {
    throw ProfileError(fmt::format("hex field: {}", e.what()));
  }
  p.validate();
  return p;
}

nlohmann::json profile_to_json(const SimProfile& p) {
  nlohmann::json proactive = nlohmann::json::array();
  for (const auto& entry : p.proactive) {
    proactive.push_back(
        {{"kind", to_string(entry.kind)}, {"payload_hex", to_hex(entry.payload)}});
  }
  return {{"iccid", p.iccid},
          {"imsi", p.imsi},
          {"k_hex", to_hex(p.k)},
          {"op_salt_hex", to_hex(p.op_salt)},
          {"sqn", p.sqn},
          {"atr_hex", to_hex(apdu::serialize_atr(p.atr))},
          {"proactive_trigger", p.proactive_trigger},
          {"proactive", proactive}};
}

SimProfile load_profile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ProfileError("cannot open profile " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ProfileError(fmt::format("{}: {}", path.string(), e.what()));
  }
  return profile_from_json(doc);
}

}  // namespace simlink::vsim
