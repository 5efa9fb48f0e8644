#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "simlink/apdu/ber_tlv.hpp"
#include "simlink/vsim/aka.hpp"
#include "simlink/vsim/identity.hpp"
#include "simlink/vsim/profile.hpp"
#include "simlink/vsim/virtual_sim.hpp"

using namespace simlink;
using namespace simlink::vsim;
using apdu::CommandApdu;
using apdu::ResponseApdu;

namespace {

// Swap the nibbles of each digit pair, pad an odd tail with F.
Bytes nibble_swap_oracle(const std::string& digits, std::size_t size) {
  Bytes out(size, 0xFF);
  for (std::size_t i = 0; i < digits.size(); ++i) {
    const auto d = static_cast<std::uint8_t>(digits[i] - '0');
    auto& o = out[i / 2];
    if (i % 2 == 0) {
      o = static_cast<std::uint8_t>((o & 0xF0) | d);
    } else {
      o = static_cast<std::uint8_t>((o & 0x0F) | (d << 4));
    }
  }
  return out;
}

CommandApdu select_fid(std::uint16_t fid) {
  return {0x00, 0xA4, 0x00, 0x0C,
          {static_cast<std::uint8_t>(fid >> 8), static_cast<std::uint8_t>(fid)}};
}

CommandApdu read_binary(std::uint16_t le) { return {0x00, 0xB0, 0x00, 0x00, {}, le}; }

CommandApdu status_poll() { return {0x80, 0xF2, 0x00, 0x0C, {}, 256}; }

Block16 block(std::uint8_t fill) {
  Block16 b;
  b.fill(fill);
  return b;
}

SimProfile profile_without_proactive() {
  auto p = demo_profile();
  p.proactive.clear();
  return p;
}

}  // namespace

TEST(Identity, IccidMatchesNibbleSwapOracle) {
  for (const std::string iccid : {"8901234567890123457", "89430123456789012300", "8943012345678901230"}) {
    EXPECT_EQ(encode_iccid(iccid), nibble_swap_oracle(iccid, 10)) << iccid;
    EXPECT_EQ(decode_iccid(encode_iccid(iccid)), iccid);
  }
  EXPECT_EQ(encode_iccid("8901234567890123457")[0], 0x98);
  EXPECT_EQ(encode_iccid("8901234567890123457")[1], 0x10);
}

TEST(Identity, ImsiLayout) {
  const std::string imsi = "232010123456789";
  const auto body = encode_imsi(imsi);
  ASSERT_EQ(body.size(), 9u);
  EXPECT_EQ(body[0], 8);
  Bytes expected{0x08};
  const auto digits = nibble_swap_oracle("9" + imsi, 8);
  expected.insert(expected.end(), digits.begin(), digits.end());
  EXPECT_EQ(body, expected);
  EXPECT_EQ(decode_imsi(body), imsi);
  EXPECT_THROW(encode_imsi("12345"), std::invalid_argument);
}

TEST(Identity, Luhn) {
  EXPECT_TRUE(luhn_valid("79927398713"));
  EXPECT_FALSE(luhn_valid("79927398710"));
  EXPECT_EQ(luhn_check_digit("7992739871"), '3');
  EXPECT_TRUE(luhn_valid("8944000000000000001"));
}

TEST(Profile, EveryIccidDigitMutationBreaksValidation) {
  const auto base = demo_profile();
  EXPECT_NO_THROW(base.validate());
  for (std::size_t i = 0; i < base.iccid.size(); ++i) {
    for (char d = '0'; d <= '9'; ++d) {
      if (d == base.iccid[i]) continue;
      auto p = base;
      p.iccid[i] = d;
      EXPECT_THROW(p.validate(), ProfileError) << p.iccid;
    }
  }
}

TEST(Profile, JsonRoundTrip) {
  const auto p = demo_profile();
  EXPECT_EQ(profile_from_json(profile_to_json(p)), p);
  auto bad = profile_to_json(p);
  bad["imsi"] = "12345";
  EXPECT_THROW(profile_from_json(bad), ProfileError);
}

TEST(ToyAka, Examples) {
  const auto zero = toy_aka(block(0), block(0), block(0), 0);
  EXPECT_EQ(zero.res, Block8{});
  EXPECT_EQ(zero.ck, Block16{});
  EXPECT_EQ(zero.ik, Block16{});

  Block16 k;
  for (std::size_t i = 0; i < 16; ++i) k[i] = static_cast<std::uint8_t>(i * 17 + 3);
  EXPECT_EQ(toy_aka(k, block(0), k, 99).res, Block8{});
}

// Pinned from the bit-level reference before the library existed.
TEST(ToyAka, PinnedVector) {
  const auto v = toy_aka(block(0x01), block(0x00), block(0x02), 1);
  EXPECT_EQ(to_hex(v.res), "0303030303030303");
  EXPECT_EQ(to_hex(v.ck), "03030303030303030303030303030303");
  EXPECT_EQ(to_hex(v.ik), "03030303030303030303030303030303");
  EXPECT_EQ(to_hex(v.autn), "03030303030280000000000000000000");
}

TEST(ToyAka, MatchesBitLevelReference) {
  std::mt19937_64 rng(4242);
  for (int i = 0; i < 100; ++i) {
    Block16 k, op, rand;
    for (auto* b : {&k, &op, &rand}) {
      const auto bytes = oracle::random_bytes(rng, 16);
      std::copy(bytes.begin(), bytes.end(), b->begin());
    }
    const std::uint64_t sqn = rng() & kSqnMask;
    const auto got = toy_aka(k, op, rand, sqn);
    const auto want = oracle::aka_reference(k, op, rand, sqn);
    ASSERT_EQ(got.res, want.res);
    ASSERT_EQ(got.ck, want.ck);
    ASSERT_EQ(got.ik, want.ik);
    ASSERT_EQ(got.autn, want.autn);
    ASSERT_EQ(recover_sqn(k, op, rand, got.autn), sqn);
  }
}

TEST(Proactive, SendShortMessageTlvReparses) {
  const Bytes payload{0x01, 0x00, 0x04, 0x81, 0x21, 0x43, 0x00, 0x00};
  const auto q = enqueue_proactive(ProactiveQueue(0), ProactiveKind::SendShortMessage, payload);
  ASSERT_EQ(q.size(), 1u);
  const auto& raw = q.head()->encoded;
  EXPECT_EQ(raw[0], 0xD0);

  const auto outer = apdu::parse_tlvs(raw);
  ASSERT_TRUE(outer);
  ASSERT_EQ(outer->size(), 1u);
  EXPECT_EQ((*outer)[0].tag, 0xD0);
  const auto inner = apdu::parse_tlvs((*outer)[0].value);
  ASSERT_TRUE(inner);
  ASSERT_GE(inner->size(), 2u);
  EXPECT_EQ((*inner)[0].tag, 0x81);
  ASSERT_EQ((*inner)[0].value.size(), 3u);
  EXPECT_EQ((*inner)[0].value[1], 0x13);
  EXPECT_EQ((*inner)[0].value[2], 0x00);
  EXPECT_EQ((*inner)[1].tag, 0x82);
  EXPECT_EQ((*inner)[1].value.size(), 2u);

  const auto details = parse_proactive_command(raw);
  ASSERT_TRUE(details);
  EXPECT_EQ(details->type, 0x13);
  EXPECT_EQ(details->number, (*inner)[0].value[0]);
}

TEST(Proactive, ProvideLocalInfoType) {
  const auto q = enqueue_proactive(ProactiveQueue(0), ProactiveKind::ProvideLocalInfo, {});
  EXPECT_EQ(parse_proactive_command(q.head()->encoded)->type, 0x26);
}

TEST(Proactive, PayloadTooLong) {
  ProactiveQueue q;
  EXPECT_THROW(q.enqueue(ProactiveKind::SendShortMessage, Bytes(300, 0)), PayloadTooLong);
  EXPECT_NO_THROW(q.enqueue(ProactiveKind::SendShortMessage, Bytes(240, 0)));
}

TEST(Proactive, ScheduledFiresAfterTriggerPolls) {
  ProactiveQueue q(3);
  q.schedule(ProactiveKind::SendShortMessage, Bytes{0x01});
  q.on_status_poll();
  q.on_status_poll();
  EXPECT_TRUE(q.empty());
  q.on_status_poll();
  EXPECT_EQ(q.size(), 1u);
  const auto cmd = q.fetch();
  ASSERT_TRUE(cmd);
  EXPECT_TRUE(q.empty());
  EXPECT_TRUE(q.awaiting_ack());
  EXPECT_FALSE(q.acknowledge(static_cast<std::uint8_t>(cmd->number + 1)));
  EXPECT_TRUE(q.acknowledge(cmd->number));
  EXPECT_FALSE(q.awaiting_ack());
}

TEST(VirtualSim, ResetReturnsProfileAtr) {
  VirtualSim sim(demo_profile());
  const auto a = sim.reset();
  EXPECT_EQ(a, demo_profile().atr);
  EXPECT_EQ(sim.reset(), a);
  EXPECT_EQ(to_hex(apdu::serialize_atr(a)), "3B9F96801FC78031E073FE211B633A204E8300900093");
}

TEST(VirtualSim, ReadIccid) {
  VirtualSim sim(demo_profile());
  sim.reset();
  EXPECT_EQ(sim.process(select_fid(kFidIccid)).sw(), 0x9000);
  const auto r = sim.process(read_binary(10));
  EXPECT_EQ(r.sw(), 0x9000);
  EXPECT_EQ(r.data(), nibble_swap_oracle(demo_profile().iccid, 10));
}

TEST(VirtualSim, ReadBinaryWithoutSelectAndAfterReset) {
  VirtualSim sim(demo_profile());
  sim.reset();
  EXPECT_EQ(sim.process(read_binary(10)).sw(), sw::kWrongParameters);
  sim.process(select_fid(kFidIccid));
  EXPECT_EQ(sim.process(read_binary(10)).sw(), 0x9000);
  sim.reset();
  EXPECT_EQ(sim.process(read_binary(10)).sw(), sw::kWrongParameters);
}

TEST(VirtualSim, SelectUnknownKeepsPointer) {
  VirtualSim sim(demo_profile());
  sim.reset();
  sim.process(select_fid(kFidIccid));
  EXPECT_EQ(sim.process(select_fid(0x1234)).sw(), sw::kFileNotFound);
  EXPECT_EQ(sim.files().current().fid, kFidIccid);
  EXPECT_EQ(sim.process(read_binary(10)).sw(), 0x9000);
}

TEST(VirtualSim, ReadsNeverPassTheFileBody) {
  VirtualSim sim(demo_profile());
  sim.reset();
  sim.process(select_fid(kFidIccid));
  EXPECT_EQ(sim.process(read_binary(12)).sw1(), 0x6C);
  const auto all = sim.process(read_binary(256));
  EXPECT_EQ(all.data().size(), 10u);
  EXPECT_EQ(sim.process({0x00, 0xB0, 0x00, 0x0A, {}, 1}).sw(), sw::kWrongOffset);
}

TEST(VirtualSim, AuthenticateWithoutLeGoesThroughGetResponse) {
  VirtualSim sim(demo_profile());
  sim.reset();
  Bytes data(17, 0x10);
  const auto first = sim.process({0x00, 0x88, 0x00, kAuth3gContext, data});
  EXPECT_EQ(first.sw1(), 0x61);
  EXPECT_EQ(first.sw2(), kAuthResponseSize);
  EXPECT_TRUE(first.data().empty());
  const auto body = sim.process({0x00, 0xC0, 0x00, 0x00, {}, kAuthResponseSize});
  EXPECT_EQ(body.sw(), 0x9000);
  EXPECT_EQ(body.data().size(), kAuthResponseSize);
  EXPECT_EQ(body.data()[0], kAuthSuccessTag);
  // The body is handed out once.
  EXPECT_TRUE(sim.process({0x00, 0xC0, 0x00, 0x00, {}, 256}).data().empty());
}

TEST(VirtualSim, ImsiViaUsimAid) {
  VirtualSim sim(demo_profile());
  sim.reset();
  EXPECT_EQ(sim.process({0x00, 0xA4, 0x04, 0x0C, usim_aid()}).sw(), 0x9000);
  EXPECT_EQ(sim.process(select_fid(kFidImsi)).sw(), 0x9000);
  const auto r = sim.process(read_binary(9));
  EXPECT_EQ(decode_imsi(r.data()), demo_profile().imsi);
}

TEST(VirtualSim, UnknownInsAndUnpowered) {
  VirtualSim sim(demo_profile());
  EXPECT_EQ(sim.process(status_poll()).sw(), sw::kTechnicalProblem);
  sim.reset();
  EXPECT_EQ(sim.process({0x00, 0x01, 0x00, 0x00}).sw(), sw::kInsNotSupported);
}

TEST(VirtualSim, AuthenticateMatchesToyAkaAndAdvancesSqn) {
  VirtualSim sim(demo_profile());
  sim.reset();
  const auto p = demo_profile();
  Block16 rand = block(0x5A);
  Bytes data(17, 0x10);
  std::copy(rand.begin(), rand.end(), data.begin() + 1);
  std::uint64_t last = sim.sqn();
  for (int round = 0; round < 3; ++round) {
    const auto r = sim.process({0x00, 0x88, 0x00, kAuth3gContext, data, 256});
    ASSERT_EQ(r.sw(), 0x9000);
    ASSERT_EQ(r.data().size(), kAuthResponseSize);
    EXPECT_GT(sim.sqn(), last);
    last = sim.sqn();
    const auto want = oracle::aka_reference(p.k, p.op_salt, rand, sim.sqn());
    EXPECT_EQ(r.data()[0], kAuthSuccessTag);
    EXPECT_EQ(r.data()[1], 8);
    EXPECT_TRUE(std::equal(want.res.begin(), want.res.end(), r.data().begin() + 2));
    EXPECT_TRUE(std::equal(want.autn.begin(), want.autn.end(), r.data().end() - 16));
  }
  EXPECT_EQ(sim.process({0x00, 0x88, 0x00, 0x80, data, 256}).sw(), sw::kWrongParameters);
}

TEST(VirtualSim, StatusReportsPendingProactiveLength) {
  VirtualSim sim(profile_without_proactive());
  sim.reset();
  EXPECT_EQ(sim.process(status_poll()).sw(), 0x9000);
  sim.enqueue_proactive(ProactiveKind::SendShortMessage, {});
  const auto len = sim.proactive().head()->encoded.size();
  const auto r = sim.process(status_poll());
  EXPECT_EQ(r.sw1(), 0x91);
  EXPECT_EQ(r.sw2(), len);
}

TEST(VirtualSim, StatusNinetyOneTwelveForTwelveOctetCommand) {
  // D0 0A 81 03 .. 82 02 .. plus one payload octet.
  VirtualSim sim(profile_without_proactive());
  sim.reset();
  sim.enqueue_proactive(ProactiveKind::ProvideLocalInfo, Bytes{0x00});
  ASSERT_EQ(sim.proactive().head()->encoded.size(), 0x0Cu);
  const auto r = sim.process(status_poll());
  EXPECT_EQ(r.sw1(), 0x91);
  EXPECT_EQ(r.sw2(), 0x0C);
}

TEST(VirtualSim, FetchThenTerminalResponseEmptiesQueue) {
  VirtualSim sim(demo_profile());
  sim.reset();
  ResponseApdu last(0x90, 0x00);
  for (int i = 0; i < 3; ++i) last = sim.process(status_poll());
  ASSERT_EQ(last.sw1(), 0x91);
  const auto fetched = sim.process({0x80, 0x12, 0x00, 0x00, {}, last.sw2()});
  ASSERT_EQ(fetched.sw(), 0x9000);
  const auto details = parse_proactive_command(fetched.data());
  ASSERT_TRUE(details);
  EXPECT_EQ(details->type, 0x13);
  const auto tr = sim.process({0x80, 0x14, 0x00, 0x00, build_terminal_response(*details)});
  EXPECT_EQ(tr.sw(), 0x9000);
  EXPECT_TRUE(sim.proactive().empty());
  EXPECT_EQ(sim.process(status_poll()).sw(), 0x9000);
}

TEST(VirtualSim, Deterministic) {
  std::vector<CommandApdu> script = {select_fid(kFidIccid), read_binary(10), status_poll(),
                                     status_poll(), status_poll(), {0x80, 0x12, 0x00, 0x00, {}, 256},
                                     {0x00, 0x01, 0x02, 0x03}};
  VirtualSim a(demo_profile()), b(demo_profile());
  a.reset();
  b.reset();
  for (const auto& c : script) EXPECT_EQ(a.process(c), b.process(c));
}
