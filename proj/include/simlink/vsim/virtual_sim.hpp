#pragma once

#include <cstdint>
#include <optional>

#include "simlink/apdu/apdu.hpp"
#include "simlink/apdu/atr.hpp"
#include "simlink/vsim/file_system.hpp"
#include "simlink/vsim/proactive.hpp"
#include "simlink/vsim/profile.hpp"

namespace simlink::vsim {

// Status words used by the card.
namespace sw {
inline constexpr std::uint16_t kOk = 0x9000;
inline constexpr std::uint16_t kWrongLength = 0x6700;
inline constexpr std::uint16_t kAuthError = 0x9862;
inline constexpr std::uint16_t kConditionsNotSatisfied = 0x6985;
inline constexpr std::uint16_t kWrongData = 0x6A80;
inline constexpr std::uint16_t kFileNotFound = 0x6A82;
inline constexpr std::uint16_t kRecordNotFound = 0x6A83;
inline constexpr std::uint16_t kWrongParameters = 0x6A86;
inline constexpr std::uint16_t kWrongOffset = 0x6B00;
inline constexpr std::uint16_t kInsNotSupported = 0x6D00;
inline constexpr std::uint16_t kTechnicalProblem = 0x6F00;
}  // namespace sw

// Layout of a successful AUTHENTICATE response:
// DB 08 RES 10 CK 10 IK 10 AUTN.
inline constexpr std::uint8_t kAuth3gContext = 0x81;  // AUTHENTICATE P2
inline constexpr std::uint8_t kAuthSuccessTag = 0xDB;
inline constexpr std::size_t kAuthResponseSize = 61;

// Deterministic UICC. One command at a time; not thread-safe.
class VirtualSim {
 public:
  explicit VirtualSim(SimProfile profile);

  // Cold or warm reset: selection back at MF, proactive state rebuilt from
  // the profile, pending GET RESPONSE data dropped. SQN is kept.
  apdu::Atr reset();

  apdu::ResponseApdu process(const apdu::CommandApdu& cmd);

  // Adds a pending proactive command outside the profile's schedule.
  void enqueue_proactive(ProactiveKind kind, ByteView payload);

  const SimProfile& profile() const noexcept { return profile_; }
  std::uint64_t sqn() const noexcept { return sqn_; }
  const ProactiveQueue& proactive() const noexcept { return queue_; }
  const FileSystem& files() const noexcept { return fs_; }
  bool powered() const noexcept { return powered_; }

 private:
  apdu::ResponseApdu dispatch(const apdu::CommandApdu& cmd);
  apdu::ResponseApdu select(const apdu::CommandApdu& cmd);
  apdu::ResponseApdu read_binary(const apdu::CommandApdu& cmd);
  apdu::ResponseApdu read_record(const apdu::CommandApdu& cmd);
  apdu::ResponseApdu get_response(const apdu::CommandApdu& cmd);
  apdu::ResponseApdu authenticate(const apdu::CommandApdu& cmd);
  apdu::ResponseApdu fetch(const apdu::CommandApdu& cmd);
  apdu::ResponseApdu terminal_response(const apdu::CommandApdu& cmd);

  // Data for commands sent without Le: 61xx now, body via GET RESPONSE.
  apdu::ResponseApdu deliver(Bytes data, const apdu::CommandApdu& cmd);

  SimProfile profile_;
  FileSystem fs_;
  ProactiveQueue queue_;
  std::uint64_t sqn_;
  std::optional<Bytes> pending_response_;
  bool powered_ = false;
};

}  // namespace simlink::vsim
