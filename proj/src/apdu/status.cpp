#include "simlink/apdu/status.hpp"

#include <fmt/format.h>

namespace simlink::apdu {

StatusClass classify_status(std::uint8_t sw1, std::uint8_t sw2) noexcept {
  const auto length = static_cast<std::uint16_t>(sw2 == 0 ? 256 : sw2);
  switch (sw1) {
    case 0x90:
      if (sw2 == 0x00) return status::Ok{};
      break;
    case 0x61:
      return status::MoreDataAvailable{length};
    case 0x6C:
      return status::WrongLe{length};
    case 0x91:
      return status::ProactivePending{sw2};
    default:
      break;
  }
  return status::Error{sw1, sw1, sw2};
}

bool is_success(const StatusClass& status) noexcept {
  return std::holds_alternative<status::Ok>(status) ||
         std::holds_alternative<status::ProactivePending>(status);
}

std::string describe(const StatusClass& s) {
  struct Visitor {
    std::string operator()(const status::Ok&) const { return "Ok"; }
    std::string operator()(const status::MoreDataAvailable& v) const {
      return fmt::format("MoreDataAvailable({})", v.count);
    }
    std::string operator()(const status::WrongLe& v) const {
      return fmt::format("WrongLe({})", v.correct_le);
    }
    std::string operator()(const status::ProactivePending& v) const {
      return fmt::format("ProactivePending({})", v.count);
    }
    std::string operator()(const status::Error& v) const {
      return fmt::format("Error({:02X}{:02X})", v.sw1, v.sw2);
    }
  };
  return std::visit(Visitor{}, s);
}

}  // namespace simlink::apdu
