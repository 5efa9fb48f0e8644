#include <gtest/gtest.h>

#include <random>
#include <set>

#include "oracles.hpp"
#include "simlink/apdu/apdu.hpp"
#include "simlink/apdu/atr.hpp"
#include "simlink/apdu/ber_tlv.hpp"
#include "simlink/apdu/ins.hpp"
#include "simlink/apdu/status.hpp"
#include "simlink/apdu/t0.hpp"

using namespace simlink;
using namespace simlink::apdu;

namespace {

ApduErrc error_of(auto&& fn) {
  try {
    fn();
  } catch (const ApduError& e) {
    return e.code();
  }
  ADD_FAILURE() << "no ApduError thrown";
  return ApduErrc::InvalidArgument;
}

}  // namespace

TEST(Hex, RoundTripAndRejects) {
  EXPECT_EQ(to_hex(Bytes{0x3F, 0x00, 0xab}), "3F00AB");
  EXPECT_EQ(from_hex("3f 00\nAB"), (Bytes{0x3F, 0x00, 0xAB}));
  EXPECT_THROW(from_hex("3F0"), std::invalid_argument);
  EXPECT_THROW(from_hex("ZZ"), std::invalid_argument);
}

TEST(EncodeCommand, Examples) {
  EXPECT_EQ(to_hex(encode_command({0x00, 0xF2, 0x00, 0x00})), "00F2000000");
  EXPECT_EQ(to_hex(encode_command({0xA0, 0xA4, 0x00, 0x00, {0x3F, 0x00}})), "A0A40000023F00");
  EXPECT_EQ(to_hex(encode_command({0x00, 0xB0, 0x00, 0x00, {}, 256})), "00B0000000");
}

// Hand-built table over small inputs, one row per ISO case and boundary.
TEST(EncodeCommand, CaseTable) {
  struct Row {
    Bytes data;
    std::optional<std::uint16_t> le;
    IsoCase iso_case;
    std::string wire;
  };
  const std::vector<Row> rows = {
      {{}, std::nullopt, IsoCase::Case1, "8012345600"},
      {{}, 1, IsoCase::Case2, "8012345601"},
      {{}, 255, IsoCase::Case2, "80123456FF"},
      {{}, 256, IsoCase::Case2, "8012345600"},
      {{0xAA}, std::nullopt, IsoCase::Case3, "8012345601AA"},
      {{0xAA, 0xBB, 0xCC}, std::nullopt, IsoCase::Case3, "8012345603AABBCC"},
      {{0xAA}, 1, IsoCase::Case4, "8012345601AA01"},
      {{0xAA, 0xBB}, 256, IsoCase::Case4, "8012345602AABB00"},
      {{0x00}, 0x10, IsoCase::Case4, "80123456010010"},
  };
  for (const auto& row : rows) {
    const CommandApdu cmd(0x80, 0x12, 0x34, 0x56, row.data, row.le);
    EXPECT_EQ(cmd.iso_case(), row.iso_case) << row.wire;
    EXPECT_EQ(to_hex(encode_command(cmd)), row.wire);
  }
}

TEST(CommandApdu, RejectsExtendedLengths) {
  EXPECT_EQ(error_of([] { CommandApdu(0, 0, 0, 0, Bytes(256, 0)); }), ApduErrc::InvalidArgument);
  EXPECT_EQ(error_of([] { CommandApdu(0, 0, 0, 0, {}, 257); }), ApduErrc::InvalidArgument);
  EXPECT_EQ(error_of([] { CommandApdu(0, 0, 0, 0, {}, 0); }), ApduErrc::InvalidArgument);
}

TEST(DecodeCommand, Examples) {
  const auto case1 = decode_command(from_hex("00F2000000"));
  EXPECT_EQ(case1.le(), std::nullopt);
  EXPECT_TRUE(case1.data().empty());
  EXPECT_EQ(decode_command(from_hex("00F20000")), case1);

  const auto select = decode_command(from_hex("A0A40000023F00"));
  EXPECT_EQ(select, CommandApdu(0xA0, 0xA4, 0x00, 0x00, {0x3F, 0x00}));

  EXPECT_EQ(error_of([] { decode_command(from_hex("A0A40000053F00")); }), ApduErrc::Truncated);
  EXPECT_EQ(error_of([] { decode_command(from_hex("A0A4")); }), ApduErrc::Truncated);
  EXPECT_EQ(error_of([] { decode_command(from_hex("A0A40000023F000102")); }),
            ApduErrc::TrailingGarbage);
  EXPECT_EQ(error_of([] { decode_command(from_hex("A0A400000001")); }), ApduErrc::TrailingGarbage);
}

TEST(DecodeCommand, Case2Le256AliasesCase1) {
  const CommandApdu le256(0x00, 0xB0, 0x00, 0x00, {}, 256);
  const auto back = decode_command(encode_command(le256));
  EXPECT_EQ(back.iso_case(), IsoCase::Case1);
  EXPECT_NE(back, le256);
}

TEST(DecodeCommand, FuzzRoundTrip) {
  std::mt19937_64 rng(20240611);
  std::array<int, 5> per_case{};
  for (int i = 0; i < 12000; ++i) {
    const int iso = 1 + i % 4;
    const auto cmd = oracle::random_command(rng, iso);
    ASSERT_EQ(static_cast<int>(cmd.iso_case()), iso);
    ASSERT_EQ(decode_command(encode_command(cmd)), cmd) << to_hex(encode_command(cmd));
    ++per_case[static_cast<std::size_t>(iso)];
  }
  for (int iso = 1; iso <= 4; ++iso) EXPECT_EQ(per_case[static_cast<std::size_t>(iso)], 3000);
}

TEST(Response, RoundTrip) {
  const ResponseApdu resp({0x01, 0x02}, 0x90, 0x00);
  EXPECT_EQ(to_hex(encode_response(resp)), "01029000");
  EXPECT_EQ(decode_response(encode_response(resp)), resp);
  EXPECT_EQ(resp.sw(), 0x9000);
  EXPECT_EQ(error_of([] { decode_response(from_hex("90")); }), ApduErrc::Truncated);
  EXPECT_EQ(error_of([] { ResponseApdu(Bytes(257, 0), 0x90, 0x00); }), ApduErrc::InvalidArgument);
}

TEST(ClassifyStatus, Examples) {
  EXPECT_EQ(classify_status(0x90, 0x00), StatusClass{status::Ok{}});
  EXPECT_EQ(classify_status(0x91, 0x0C), StatusClass{status::ProactivePending{12}});
  EXPECT_EQ(classify_status(0x6C, 0x10), StatusClass{status::WrongLe{16}});
  EXPECT_EQ(classify_status(0x61, 0x00), StatusClass{status::MoreDataAvailable{256}});
  EXPECT_EQ(describe(classify_status(0x6A, 0x82)), "Error(6A82)");
  EXPECT_EQ(describe(classify_status(0x91, 0x0C)), "ProactivePending(12)");
}

TEST(ClassifyStatus, TotalAndPureOverAllPairs) {
  for (int sw1 = 0; sw1 < 256; ++sw1) {
    for (int sw2 = 0; sw2 < 256; ++sw2) {
      const auto a = classify_status(static_cast<std::uint8_t>(sw1), static_cast<std::uint8_t>(sw2));
      const auto b = classify_status(static_cast<std::uint8_t>(sw1), static_cast<std::uint8_t>(sw2));
      ASSERT_EQ(a, b);
      // Independent reading of the status-word table.
      const std::uint16_t len = sw2 == 0 ? 256 : static_cast<std::uint16_t>(sw2);
      StatusClass expected = status::Error{static_cast<std::uint8_t>(sw1),
                                           static_cast<std::uint8_t>(sw1),
                                           static_cast<std::uint8_t>(sw2)};
      if (sw1 == 0x90 && sw2 == 0) expected = status::Ok{};
      if (sw1 == 0x61) expected = status::MoreDataAvailable{len};
      if (sw1 == 0x6C) expected = status::WrongLe{len};
      if (sw1 == 0x91) expected = status::ProactivePending{static_cast<std::uint8_t>(sw2)};
      ASSERT_EQ(a, expected) << sw1 << " " << sw2;
      ASSERT_EQ(is_success(a), (sw1 == 0x90 && sw2 == 0) || sw1 == 0x91);
    }
  }
}

TEST(ParseAtr, Examples) {
  const auto minimal = parse_atr(from_hex("3B00"));
  EXPECT_EQ(minimal.convention, Convention::Direct);
  EXPECT_TRUE(minimal.interface_bytes.empty());
  EXPECT_TRUE(minimal.historical.empty());
  EXPECT_FALSE(minimal.tck);

  const auto t1 = parse_atr(from_hex("3B800181"));
  ASSERT_EQ(t1.interface_bytes.size(), 1u);
  EXPECT_EQ(t1.interface_bytes[0], (InterfaceByte{InterfaceKind::TD, 1, 0x01}));
  EXPECT_EQ(t1.tck, 0x81);
  EXPECT_EQ(t1.protocols(), std::vector<int>{1});

  EXPECT_EQ(error_of([] { parse_atr(from_hex("3B")); }), ApduErrc::Truncated);
}

TEST(ParseAtr, CorpusVerdictsAndRoundTrip) {
  const auto corpus = oracle::atr_corpus();
  ASSERT_GE(corpus.size(), 20u);
  for (const auto& c : corpus) {
    const auto raw = from_hex(c.hex);
    if (!c.error) {
      const auto atr = parse_atr(raw);
      EXPECT_EQ(serialize_atr(atr), raw) << c.hex;
      // TCK present iff some TD announces a protocol other than T=0.
      bool needs_tck = false;
      for (const auto& ib : atr.interface_bytes) {
        if (ib.kind == InterfaceKind::TD && (ib.value & 0x0F) != 0) needs_tck = true;
      }
      EXPECT_EQ(atr.tck.has_value(), needs_tck) << c.hex;
      if (atr.tck) {
        std::uint8_t x = 0;
        for (std::size_t i = 1; i < raw.size(); ++i) x ^= raw[i];
        EXPECT_EQ(x, 0) << c.hex;
      }
      EXPECT_LE(raw.size(), Atr::kMaxLength);
    } else {
      EXPECT_EQ(error_of([&] { parse_atr(raw); }), *c.error) << c.hex;
    }
  }
}

// Every single-octet XOR corruption of the TCK is caught.
TEST(ParseAtr, TckOracleOverOctetRange) {
  for (int tck = 0; tck < 256; ++tck) {
    const Bytes raw{0x3B, 0x80, 0x01, static_cast<std::uint8_t>(tck)};
    const bool valid = (0x80 ^ 0x01 ^ tck) == 0;
    if (valid) {
      EXPECT_NO_THROW(parse_atr(raw));
    } else {
      EXPECT_EQ(error_of([&] { parse_atr(raw); }), ApduErrc::BadChecksum);
    }
  }
}

TEST(ProcedureStep, Examples) {
  const auto st = ProcedureState::for_command(0xA4);
  EXPECT_EQ(procedure_step(st, 0xA4).transition, Transition{procedure::TransferAll{}});
  EXPECT_EQ(procedure_step(st, 0x5B).transition, Transition{procedure::TransferOne{}});
  EXPECT_EQ(procedure_step(st, 0x60).transition, Transition{procedure::Waited{}});
  EXPECT_EQ(procedure_step(st, 0x90).transition, Transition{procedure::StatusStarted{0x90}});
  EXPECT_EQ(procedure_step(st, 0x6C).transition, Transition{procedure::StatusStarted{0x6C}});
  EXPECT_EQ(error_of([&] { procedure_step(st, 0x12); }), ApduErrc::ProtocolViolation);
}

TEST(ProcedureStep, ComplementEchoDependsOnIns) {
  // 0x5B is INS^FF only for 0xA4; for another INS it matches nothing.
  const auto st = ProcedureState::for_command(0xB0);
  EXPECT_EQ(error_of([&] { procedure_step(st, 0x5B); }), ApduErrc::ProtocolViolation);
}

TEST(ProcedureStep, NothingTransfersAfterStatus) {
  for (int ins = 0; ins < 256; ins += 7) {
    const auto st = ProcedureState::for_command(static_cast<std::uint8_t>(ins));
    for (int sw1 : {0x61, 0x6C, 0x90, 0x91, 0x98}) {
      if (sw1 == ins || sw1 == (ins ^ 0xFF)) continue;
      const auto after = procedure_step(st, static_cast<std::uint8_t>(sw1)).next;
      ASSERT_TRUE(after.status_seen);
      for (int b = 0; b < 256; ++b) {
        ASSERT_EQ(error_of([&] { procedure_step(after, static_cast<std::uint8_t>(b)); }),
                  ApduErrc::ProtocolViolation);
      }
    }
  }
}

TEST(BerTlv, EncodeAndReparse) {
  EXPECT_EQ(to_hex(encode_tlv(0x81, Bytes{0x01, 0x13, 0x00})), "8103011300");
  const Bytes long_value(200, 0x42);
  const auto enc = encode_tlv(0x8B, long_value);
  EXPECT_EQ(enc[1], 0x81);
  EXPECT_EQ(enc[2], 200);

  std::mt19937_64 rng(7);
  for (int i = 0; i < 200; ++i) {
    std::vector<Tlv> tlvs;
    Bytes wire;
    for (int j = 0; j < 3; ++j) {
      const auto v = oracle::random_bytes(rng, rng() % 256);
      const auto tag = static_cast<std::uint8_t>(0x80 + j);
      tlvs.push_back({tag, v});
      const auto one = encode_tlv(tag, v);
      wire.insert(wire.end(), one.begin(), one.end());
    }
    EXPECT_EQ(parse_tlvs(wire), tlvs);
  }
  EXPECT_EQ(parse_tlvs(from_hex("8105AA")), std::nullopt);
}

TEST(Ins, Names) {
  EXPECT_EQ(ins::name(0xA4), "SELECT");
  EXPECT_EQ(ins::name(0x12), "FETCH");
  EXPECT_EQ(ins::name(0x01), std::nullopt);
}
