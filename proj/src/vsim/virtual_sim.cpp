#include "simlink/vsim/virtual_sim.hpp"

#include <algorithm>

#include "simlink/apdu/ins.hpp"
#include "simlink/vsim/aka.hpp"

namespace simlink::vsim {

namespace {

using apdu::CommandApdu;
using apdu::ResponseApdu;

constexpr std::uint8_t kSelectByFid = 0x00;
constexpr std::uint8_t kSelectByAid = 0x04;
constexpr std::uint8_t kRandTag = 0x10;

ResponseApdu status(std::uint16_t word) {
  return ResponseApdu(static_cast<std::uint8_t>(word >> 8),
                      static_cast<std::uint8_t>(word & 0xFF));
}

ResponseApdu ok(Bytes data = {}) { return ResponseApdu(std::move(data), 0x90, 0x00); }

ResponseApdu wrong_le(std::size_t available) {
  return ResponseApdu(0x6C, static_cast<std::uint8_t>(available % 256));
}

// Le of 256 (wire 00) means "whatever is available, up to 256".
bool le_accepts(const CommandApdu& cmd, std::size_t available) {
  if (!cmd.le()) return true;
  return *cmd.le() == CommandApdu::kMaxLe || *cmd.le() == available;
}

}  // namespace

VirtualSim::VirtualSim(SimProfile profile)
    : profile_(std::move(profile)),
      fs_(FileSystem::for_profile(profile_)),
      queue_(profile_.proactive_trigger),
      sqn_(profile_.sqn) {
  profile_.validate();
}

apdu::Atr VirtualSim::reset() {
  fs_.reset();
  queue_.clear();
  for (const auto& entry : profile_.proactive) {
    if (queue_.trigger() == 0) {
      queue_.enqueue(entry.kind, entry.payload);
    } else {
      queue_.schedule(entry.kind, entry.payload);
    }
  }
  pending_response_.reset();
  powered_ = true;
  return profile_.atr;
}

void VirtualSim::enqueue_proactive(ProactiveKind kind, ByteView payload) {
  queue_.enqueue(kind, payload);
}

ResponseApdu VirtualSim::process(const CommandApdu& cmd) {
  if (!powered_) return status(sw::kTechnicalProblem);
  ResponseApdu resp = dispatch(cmd);
  if (resp.sw() == sw::kOk && !queue_.empty()) {
    return ResponseApdu(resp.data(), 0x91,
                        static_cast<std::uint8_t>(queue_.head()->encoded.size()));
  }
  return resp;
}

ResponseApdu VirtualSim::dispatch(const CommandApdu& cmd) {
  if (cmd.ins() != apdu::ins::kGetResponse) pending_response_.reset();
  switch (cmd.ins()) {
    case apdu::ins::kSelect:
      return select(cmd);
    case apdu::ins::kReadBinary:
      return read_binary(cmd);
    case apdu::ins::kReadRecord:
      return read_record(cmd);
    case apdu::ins::kGetResponse:
      return get_response(cmd);
    case apdu::ins::kStatus:
      queue_.on_status_poll();
      return ok();
    case apdu::ins::kAuthenticate:
      return authenticate(cmd);
    case apdu::ins::kFetch:
      return fetch(cmd);
    case apdu::ins::kTerminalResponse:
      return terminal_response(cmd);
    case apdu::ins::kEnvelope:
      return ok();
    default:
      return status(sw::kInsNotSupported);
  }
}

ResponseApdu VirtualSim::select(const CommandApdu& cmd) {
  switch (cmd.p1()) {
    case kSelectByFid: {
      if (cmd.data().size() != 2) return status(sw::kWrongLength);
      const auto fid = static_cast<std::uint16_t>((cmd.data()[0] << 8) | cmd.data()[1]);
      return fs_.select_fid(fid) ? ok() : status(sw::kFileNotFound);
    }
    case kSelectByAid:
      return fs_.select_aid(cmd.data()) ? ok() : status(sw::kFileNotFound);
    default:
      return status(sw::kWrongParameters);
  }
}

ResponseApdu VirtualSim::read_binary(const CommandApdu& cmd) {
  const auto& file = fs_.current();
  if (file.kind != FileKind::Transparent) return status(sw::kWrongParameters);
  // Short-FID addressing (P1 bit 8) is not supported.
  if (cmd.p1() & 0x80) return status(sw::kWrongParameters);
  const std::size_t offset = (std::size_t{cmd.p1()} << 8) | cmd.p2();
  if (offset >= file.body.size()) return status(sw::kWrongOffset);

  const std::size_t available = file.body.size() - offset;
  std::size_t count = available;
  if (cmd.le() && *cmd.le() != CommandApdu::kMaxLe) {
    if (*cmd.le() > available) return wrong_le(available);
    count = *cmd.le();
  }
  count = std::min(count, ResponseApdu::kMaxData);
  const auto first = file.body.begin() + static_cast<std::ptrdiff_t>(offset);
  return ok(Bytes(first, first + static_cast<std::ptrdiff_t>(count)));
}

ResponseApdu VirtualSim::read_record(const CommandApdu& cmd) {
  const auto& file = fs_.current();
  if (file.kind != FileKind::LinearFixed) return status(sw::kWrongParameters);
  if ((cmd.p2() & 0x07) != 0x04) return status(sw::kWrongParameters);
  if (cmd.p1() == 0 || cmd.p1() > file.records.size()) {
    return status(sw::kRecordNotFound);
  }
  const auto& record = file.records[cmd.p1() - 1];
  if (!le_accepts(cmd, record.size())) return wrong_le(record.size());
  return ok(record);
}

ResponseApdu VirtualSim::get_response(const CommandApdu& cmd) {
  if (!pending_response_) return ok();
  if (!le_accepts(cmd, pending_response_->size())) {
    return wrong_le(pending_response_->size());
  }
  Bytes data = std::move(*pending_response_);
  pending_response_.reset();
  return ok(std::move(data));
}

ResponseApdu VirtualSim::authenticate(const CommandApdu& cmd) {
  if (cmd.p2() != kAuth3gContext) return status(sw::kWrongParameters);
  const auto& data = cmd.data();
  if (data.size() != 17 || data[0] != kRandTag) return status(sw::kWrongData);
  if (!le_accepts(cmd, kAuthResponseSize) && *cmd.le() < kAuthResponseSize) {
    return wrong_le(kAuthResponseSize);
  }

  Block16 rand{};
  std::copy(data.begin() + 1, data.end(), rand.begin());
  sqn_ = (sqn_ + 1) & kSqnMask;
  const auto v = toy_aka(profile_.k, profile_.op_salt, rand, sqn_);

  Bytes out{kAuthSuccessTag, static_cast<std::uint8_t>(v.res.size())};
  out.insert(out.end(), v.res.begin(), v.res.end());
  for (const auto* block : {&v.ck, &v.ik, &v.autn}) {
    out.push_back(static_cast<std::uint8_t>(block->size()));
    out.insert(out.end(), block->begin(), block->end());
  }
  return deliver(std::move(out), cmd);
}

ResponseApdu VirtualSim::fetch(const CommandApdu& cmd) {
  const auto* head = queue_.head();
  if (head == nullptr) return status(sw::kConditionsNotSatisfied);
  if (!le_accepts(cmd, head->encoded.size())) return wrong_le(head->encoded.size());
  auto command = queue_.fetch();
  return ok(std::move(command->encoded));
}

ResponseApdu VirtualSim::terminal_response(const CommandApdu& cmd) {
  const auto details = parse_terminal_response(cmd.data());
  if (!details || !queue_.acknowledge(details->number)) {
    return status(sw::kConditionsNotSatisfied);
  }
  return ok();
}

ResponseApdu VirtualSim::deliver(Bytes data, const CommandApdu& cmd) {
  if (cmd.le()) return ok(std::move(data));
  const auto size = data.size();
  pending_response_ = std::move(data);
  return ResponseApdu(0x61, static_cast<std::uint8_t>(size % 256));
}

}  // namespace simlink::vsim
