#include "simlink/vsim/proactive.hpp"

#include <fmt/format.h>

#include "simlink/apdu/ber_tlv.hpp"

namespace simlink::vsim {

namespace {

constexpr std::uint8_t kProactiveTag = 0xD0;
constexpr std::uint8_t kCommandDetailsTag = 0x81;
constexpr std::uint8_t kDeviceIdentitiesTag = 0x82;
constexpr std::uint8_t kResultTag = 0x83;
constexpr std::uint8_t kSmsTpduTag = 0x8B;

constexpr std::uint8_t kDeviceUicc = 0x81;
constexpr std::uint8_t kDeviceTerminal = 0x82;
constexpr std::uint8_t kDeviceNetwork = 0x83;

// Comprehension-required bit may or may not be set on simple TLV tags.
bool same_tag(std::uint8_t tag, std::uint8_t expected) {
  return (tag & 0x7F) == (expected & 0x7F);
}

std::optional<CommandDetails> details_in(const std::vector<apdu::Tlv>& tlvs) {
  for (const auto& tlv : tlvs) {
    if (same_tag(tlv.tag, kCommandDetailsTag) && tlv.value.size() == 3) {
      return CommandDetails{tlv.value[0], tlv.value[1], tlv.value[2]};
    }
  }
  return std::nullopt;
}

}  // namespace

std::string_view to_string(ProactiveKind kind) noexcept {
  switch (kind) {
    case ProactiveKind::SendShortMessage:
      return "SendShortMessage";
    case ProactiveKind::ProvideLocalInfo:
      return "ProvideLocalInfo";
  }
  return "Unknown";
}

std::optional<ProactiveKind> proactive_kind_from_string(std::string_view name) {
  if (name == "SendShortMessage") return ProactiveKind::SendShortMessage;
  if (name == "ProvideLocalInfo") return ProactiveKind::ProvideLocalInfo;
  return std::nullopt;
}

std::string proactive_type_name(std::uint8_t type) {
  switch (type) {
    case 0x01:
      return "REFRESH";
    case 0x03:
      return "POLL_INTERVAL";
    case 0x05:
      return "SET_UP_EVENT_LIST";
    case 0x13:
      return "SEND_SHORT_MESSAGE";
    case 0x21:
      return "DISPLAY_TEXT";
    case 0x25:
      return "SET_UP_MENU";
    case 0x26:
      return "PROVIDE_LOCAL_INFORMATION";
    default:
      return fmt::format("TYPE_{:02X}", type);
  }
}

PayloadTooLong::PayloadTooLong(std::size_t size)
    : std::length_error(fmt::format(
          "PayloadTooLong: proactive payload of {} octets exceeds {}", size,
          kMaxProactivePayload)) {}

Bytes build_proactive_command(std::uint8_t number, ProactiveKind kind,
                              ByteView payload) {
  if (payload.size() > kMaxProactivePayload) throw PayloadTooLong(payload.size());

  const auto type = static_cast<std::uint8_t>(kind);
  const std::uint8_t destination =
      kind == ProactiveKind::SendShortMessage ? kDeviceNetwork : kDeviceTerminal;

  Bytes body;
  const Bytes details{number, type, 0x00};
  const Bytes devices{kDeviceUicc, destination};
  auto append = [&body](const Bytes& part) {
    body.insert(body.end(), part.begin(), part.end());
  };
  append(apdu::encode_tlv(kCommandDetailsTag, details));
  append(apdu::encode_tlv(kDeviceIdentitiesTag, devices));
  if (!payload.empty()) {
    if (kind == ProactiveKind::SendShortMessage) {
      append(apdu::encode_tlv(kSmsTpduTag, payload));
    } else {
      body.insert(body.end(), payload.begin(), payload.end());
    }
  }
  return apdu::encode_tlv(kProactiveTag, body);
}

std::optional<CommandDetails> parse_proactive_command(ByteView raw) {
  const auto outer = apdu::parse_tlvs(raw);
  if (!outer || outer->size() != 1 || outer->front().tag != kProactiveTag) {
    return std::nullopt;
  }
  const auto inner = apdu::parse_tlvs(outer->front().value);
  if (!inner) return std::nullopt;
  return details_in(*inner);
}

std::optional<CommandDetails> parse_terminal_response(ByteView raw) {
  const auto tlvs = apdu::parse_tlvs(raw);
  if (!tlvs) return std::nullopt;
  return details_in(*tlvs);
}

Bytes build_terminal_response(const CommandDetails& details) {
  Bytes out = apdu::encode_tlv(
      kCommandDetailsTag, Bytes{details.number, details.type, details.qualifier});
  const auto devices =
      apdu::encode_tlv(kDeviceIdentitiesTag, Bytes{kDeviceTerminal, kDeviceUicc});
  const auto result = apdu::encode_tlv(kResultTag, Bytes{0x00});
  out.insert(out.end(), devices.begin(), devices.end());
  out.insert(out.end(), result.begin(), result.end());
  return out;
}

std::uint8_t ProactiveQueue::next_number() {
  last_number_ = static_cast<std::uint8_t>(last_number_ == 0xFE ? 1 : last_number_ + 1);
  return last_number_;
}

void ProactiveQueue::enqueue(ProactiveKind kind, ByteView payload) {
  if (payload.size() > kMaxProactivePayload) throw PayloadTooLong(payload.size());
  const auto number = next_number();
  pending_.push_back({number, kind, build_proactive_command(number, kind, payload)});
}

void ProactiveQueue::schedule(ProactiveKind kind, ByteView payload) {
  if (payload.size() > kMaxProactivePayload) throw PayloadTooLong(payload.size());
  scheduled_.push_back({kind, Bytes(payload.begin(), payload.end())});
}

void ProactiveQueue::on_status_poll() {
  ++status_polls_;
  if (status_polls_ != trigger_) return;
  while (!scheduled_.empty()) {
    enqueue(scheduled_.front().kind, scheduled_.front().payload);
    scheduled_.pop_front();
  }
}

void ProactiveQueue::clear() {
  pending_.clear();
  scheduled_.clear();
  awaiting_ack_.reset();
  status_polls_ = 0;
}

std::optional<ProactiveCommand> ProactiveQueue::fetch() {
  if (pending_.empty()) return std::nullopt;
  awaiting_ack_ = std::move(pending_.front());
  pending_.pop_front();
  return awaiting_ack_;
}

bool ProactiveQueue::acknowledge(std::uint8_t number) {
  if (!awaiting_ack_ || awaiting_ack_->number != number) return false;
  awaiting_ack_.reset();
  return true;
}

ProactiveQueue enqueue_proactive(ProactiveQueue queue, ProactiveKind kind,
                                 ByteView payload) {
  queue.enqueue(kind, payload);
  return queue;
}

}  // namespace simlink::vsim
