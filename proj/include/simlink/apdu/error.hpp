#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace simlink::apdu {

enum class ApduErrc {
  Truncated,
  TrailingGarbage,
  BadChecksum,
  UnknownConvention,
  Oversize,
  InvalidArgument,
  ProtocolViolation,
};

std::string_view to_string(ApduErrc code);

class ApduError : public std::runtime_error {
 public:
  ApduError(ApduErrc code, const std::string& detail);

  ApduErrc code() const noexcept { return code_; }

 private:
  ApduErrc code_;
};

}  // namespace simlink::apdu
