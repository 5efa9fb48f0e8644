#pragma once

#include <array>
#include <cstdint>

// Toy authentication and key agreement. This is an XOR/rotate stand-in with
// no cryptographic strength; it only exercises the challenge/response round
// trip and the shape of RES, CK, IK and AUTN.

namespace simlink::vsim {

using Block16 = std::array<std::uint8_t, 16>;
using Block8 = std::array<std::uint8_t, 8>;

inline constexpr std::uint64_t kSqnMask = (std::uint64_t{1} << 48) - 1;

struct AkaVector {
  Block8 res{};
  Block16 ck{};
  Block16 ik{};
  Block16 autn{};

  bool operator==(const AkaVector&) const = default;
};

// m = k ^ rand ^ op_salt; res = m[0..8); ck/ik = m rotated left by 1/2
// octets; autn = (sqn ^ m[0..6)) || 80 00 || (m[0..8) ^ m[8..16)).
AkaVector toy_aka(const Block16& k, const Block16& op_salt, const Block16& rand,
                  std::uint64_t sqn) noexcept;

// Reads the concealed sequence number back out of AUTN.
std::uint64_t recover_sqn(const Block16& k, const Block16& op_salt,
                                  const Block16& rand,
                                  const Block16& autn) noexcept;

}  // namespace simlink::vsim
