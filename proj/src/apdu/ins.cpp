#include "simlink/apdu/ins.hpp"

namespace simlink::apdu::ins {

std::optional<std::string_view> name(std::uint8_t code) noexcept {
  switch (code) {
    case kSelect:
      return "SELECT";
    case kReadBinary:
      return "READ_BINARY";
    case kReadRecord:
      return "READ_RECORD";
    case kGetResponse:
      return "GET_RESPONSE";
    case kStatus:
      return "STATUS";
    case kAuthenticate:
      return "AUTHENTICATE";
    case kFetch:
      return "FETCH";
    case kTerminalResponse:
      return "TERMINAL_RESPONSE";
    case kEnvelope:
      return "ENVELOPE";
    default:
      return std::nullopt;
  }
}

}  // namespace simlink::apdu::ins
