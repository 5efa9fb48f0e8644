#include "simlink/vsim/aka.hpp"

namespace simlink::vsim {

namespace {

Block16 mix(const Block16& k, const Block16& op_salt, const Block16& rand) {
  Block16 m{};
  for (std::size_t i = 0; i < m.size(); ++i) {
    m[i] = static_cast<std::uint8_t>(k[i] ^ rand[i] ^ op_salt[i]);
  }
  return m;
}

Block16 rotate_left(const Block16& m, std::size_t octets) {
  Block16 out{};
  for (std::size_t i = 0; i < m.size(); ++i) out[i] = m[(i + octets) % m.size()];
  return out;
}

}  // namespace

AkaVector toy_aka(const Block16& k, const Block16& op_salt, const Block16& rand,
                  std::uint64_t sqn) noexcept {
  const Block16 m = mix(k, op_salt, rand);
  AkaVector v;
  for (std::size_t i = 0; i < v.res.size(); ++i) v.res[i] = m[i];
  v.ck = rotate_left(m, 1);
  v.ik = rotate_left(m, 2);

  sqn &= kSqnMask;
  for (std::size_t i = 0; i < 6; ++i) {
    const auto sqn_octet = static_cast<std::uint8_t>(sqn >> (8 * (5 - i)));
    v.autn[i] = static_cast<std::uint8_t>(sqn_octet ^ m[i]);
  }
  v.autn[6] = 0x80;
  v.autn[7] = 0x00;
  for (std::size_t i = 0; i < 8; ++i) {
    v.autn[8 + i] = static_cast<std::uint8_t>(m[i] ^ m[i + 8]);
  }
  return v;
}

std::uint64_t recover_sqn(const Block16& k, const Block16& op_salt,
                          const Block16& rand, const Block16& autn) noexcept {
  const Block16 m = mix(k, op_salt, rand);
  std::uint64_t sqn = 0;
  for (std::size_t i = 0; i < 6; ++i) sqn = (sqn << 8) | (autn[i] ^ m[i]);
  return sqn;
}

}  // namespace simlink::vsim
