#include "simlink/apdu/error.hpp"

namespace simlink::apdu {

std::string_view to_string(ApduErrc code) {
  switch (code) {
    case ApduErrc::Truncated:
      return "Truncated";
    case ApduErrc::TrailingGarbage:
      return "TrailingGarbage";
    case ApduErrc::BadChecksum:
      return "BadChecksum";
    case ApduErrc::UnknownConvention:
      return "UnknownConvention";
    case ApduErrc::Oversize:
      return "Oversize";
    case ApduErrc::InvalidArgument:
      return "InvalidArgument";
    case ApduErrc::ProtocolViolation:
      return "ProtocolViolation";
  }
  return "Unknown";
}

ApduError::ApduError(ApduErrc code, const std::string& detail)
    : std::runtime_error(std::string(to_string(code)) + ": " + detail),
      code_(code) {}

}  // namespace simlink::apdu
