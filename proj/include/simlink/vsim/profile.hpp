#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "simlink/apdu/atr.hpp"
#include "simlink/vsim/aka.hpp"
#include "simlink/vsim/proactive.hpp"

namespace simlink::vsim {

class ProfileError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ProactiveSpec {
  ProactiveKind kind = ProactiveKind::SendShortMessage;
  Bytes payload;

  bool operator==(const ProactiveSpec&) const = default;
};

// Identity and configuration of one virtual SIM.
struct SimProfile {
  std::string iccid;
  std::string imsi;
  Block16 k{};
  Block16 op_salt{};
  std::uint64_t sqn = 0;
  apdu::Atr atr;
  std::vector<ProactiveSpec> proactive;
  unsigned proactive_trigger = ProactiveQueue::kDefaultTrigger;

  // Throws ProfileError naming the first broken field.
  void validate() const;

  bool operator==(const SimProfile&) const = default;
};

// ATR presented by the demo profile (T=0 and T=15, 15 historical bytes).
apdu::Atr demo_atr();

// A valid profile with one scheduled silent SEND SHORT MESSAGE.
SimProfile demo_profile();

// {iccid, imsi, k_hex, op_salt_hex, sqn, proactive: [{kind, payload_hex}],
//  atr_hex?, proactive_trigger?}
SimProfile profile_from_json(const nlohmann::json& doc);
nlohmann::json profile_to_json(const SimProfile& profile);
SimProfile load_profile(const std::filesystem::path& path);

}  // namespace simlink::vsim
