#include <gtest/gtest.h>

#include <random>

#include "simlink/lab/front_end.hpp"
#include "simlink/lab/link.hpp"
#include "simlink/lab/modem.hpp"
#include "simlink/lab/sweep.hpp"
#include "simlink/vsim/profile.hpp"
#include "simlink/vsim/virtual_sim.hpp"

using namespace simlink;
using namespace simlink::lab;
using apdu::CommandApdu;
using apdu::ResponseApdu;

namespace {

// Largest silence the modem sees while a response takes `latency` to come
// back: with NULLs every `interval` it is the interval (or the latency if
// shorter), without them the whole latency.
std::int64_t longest_gap(std::int64_t latency, bool stall, std::int64_t interval) {
  if (!stall || interval <= 0 || latency <= interval) return latency;
  const std::int64_t tail = latency - ((latency - 1) / interval) * interval;
  return std::max(interval, tail);
}

SessionReport run_demo(std::int64_t rtt, bool stall, std::int64_t jitter = 0) {
  const auto profile = vsim::demo_profile();
  vsim::VirtualSim sim(profile);
  DelayedLink link(sim, {rtt, jitter, 5});
  auto modem = ModemConfig::for_profile(profile);
  modem.stall.enabled = stall;
  return run_session(modem, link);
}

class BadAtrLink final : public CardLink {
 public:
  ResetResult reset() override { return {from_hex("3B800180"), 0}; }
  Exchange transmit(const CommandApdu&) override { return {ResponseApdu(0x90, 0x00), 0}; }
};

}  // namespace

TEST(Modem, DirectLinkFullScript) {
  const auto profile = vsim::demo_profile();
  vsim::VirtualSim sim(profile);
  DirectLink link(sim);
  const auto report = run_session(ModemConfig::for_profile(profile), link);
  ASSERT_TRUE(report.ok()) << report.failure->detail;
  EXPECT_TRUE(report.aka_ok);
  EXPECT_EQ(report.completed.size(), 7u);
  EXPECT_EQ(report.completed.back(), "ProactiveFetchLoop");
  EXPECT_EQ(report.iccid, profile.iccid);
  EXPECT_EQ(report.imsi, profile.imsi);
  EXPECT_EQ(report.proactive_fetched, 1u);
  EXPECT_EQ(report.elapsed_ms, 2000);  // idle between polls only
  EXPECT_EQ(report.idle_ms, 2000);
}

TEST(Modem, WrongKeyFailsAuthentication) {
  const auto profile = vsim::demo_profile();
  vsim::VirtualSim sim(profile);
  DirectLink link(sim);
  auto modem = ModemConfig::for_profile(profile);
  modem.k[3] ^= 0x40;
  const auto report = run_session(modem, link);
  ASSERT_TRUE(report.failure);
  EXPECT_EQ(report.failure->kind, FailureKind::AuthFailed);
  EXPECT_EQ(report.failure->phase, "AuthenticateLoop");
  EXPECT_FALSE(report.aka_ok);
}

TEST(Modem, ReplayedSequenceNumberRejected) {
  const auto profile = vsim::demo_profile();
  vsim::VirtualSim sim(profile);
  DirectLink link(sim);
  auto modem = ModemConfig::for_profile(profile);
  modem.last_sqn = profile.sqn + 10;
  const auto report = run_session(modem, link);
  ASSERT_TRUE(report.failure);
  EXPECT_EQ(report.failure->kind, FailureKind::AuthFailed);
}

TEST(Modem, BadAtrIsProtocolViolation) {
  BadAtrLink link;
  const auto report = run_session(ModemConfig{}, link);
  ASSERT_TRUE(report.failure);
  EXPECT_EQ(report.failure->kind, FailureKind::ProtocolViolation);
  EXPECT_EQ(report.failure->phase, "Reset");
  EXPECT_TRUE(report.completed.empty());
}

TEST(FrontEnd, TimelineShape) {
  const CommandApdu select{0x00, 0xA4, 0x00, 0x0C, {0x2F, 0xE2}};
  const auto line = t0_timeline(select, ResponseApdu(0x90, 0x00), 350, {true, 100});
  const std::vector<TimedByte> want = {{0, 0xA4},   {100, 0x60}, {200, 0x60},
                                       {300, 0x60}, {350, 0x90}, {350, 0x00}};
  EXPECT_EQ(line, want);
  const CommandApdu read{0x00, 0xB0, 0x00, 0x00, {}, 2};
  const auto plain = t0_timeline(read, ResponseApdu({1, 2}, 0x90, 0x00), 50, {false, 100});
  const std::vector<TimedByte> want_plain = {{50, 0xB0}, {50, 0x90}, {50, 0x00}};
  EXPECT_EQ(plain, want_plain);
}

TEST(FrontEnd, StallExample) {
  const CommandApdu read{0x00, 0xB0, 0x00, 0x00, {}, 10};
  const ResponseApdu resp(Bytes(10, 0x98), 0x90, 0x00);
  const auto with = walk_t0_timeline(0xB0, t0_timeline(read, resp, 600, {true, 100}), 300);
  EXPECT_TRUE(with.completed);
  EXPECT_EQ(with.elapsed_ms, 600);
  EXPECT_EQ(with.sw1, 0x90);
  EXPECT_EQ(with.sw2, 0x00);
  const auto without = walk_t0_timeline(0xB0, t0_timeline(read, resp, 600, {false, 100}), 300);
  EXPECT_FALSE(without.completed);
  EXPECT_EQ(without.elapsed_ms, 300);
}

// Discrete-event check of the front-end against the closed-form gap.
TEST(FrontEnd, StallOracleGrid) {
  const CommandApdu select{0x00, 0xA4, 0x00, 0x0C, {0x3F, 0x00}};
  const CommandApdu read{0x00, 0xB0, 0x00, 0x00, {}, 4};
  for (std::int64_t latency : {0, 1, 50, 99, 100, 101, 250, 299, 300, 301, 600, 900, 1234}) {
    for (std::int64_t waiting : {50, 100, 300, 960}) {
      for (std::int64_t interval : {0, 40, 100, 300, 500}) {
        for (bool stall : {false, true}) {
          const bool want = longest_gap(latency, stall, interval) <= waiting;
          for (const auto& [cmd, resp] :
               {std::pair{select, ResponseApdu(0x90, 0x00)},
                std::pair{read, ResponseApdu({1, 2, 3, 4}, 0x90, 0x00)}}) {
            const auto got = walk_t0_timeline(
                cmd.ins(), t0_timeline(cmd, resp, latency, {stall, interval}), waiting);
            ASSERT_EQ(got.completed, want) << latency << " " << waiting << " " << interval << " "
                                           << stall;
            if (want) {
              EXPECT_EQ(got.elapsed_ms, latency);
            }
          }
        }
      }
    }
  }
}

TEST(FrontEnd, WalkerRejectsIllegalProcedureByte) {
  const std::vector<TimedByte> line = {{0, 0x42}, {0, 0x00}};
  EXPECT_THROW(walk_t0_timeline(0xB0, line, 300), apdu::ApduError);
}

TEST(Modem, TimeoutWithoutStall) {
  const auto report = run_demo(600, false);
  ASSERT_TRUE(report.failure);
  EXPECT_EQ(report.failure->kind, FailureKind::TimeoutExpired);
  EXPECT_EQ(report.failure->phase, "ReadIccid");
  EXPECT_EQ(report.elapsed_ms, 600 + 300);  // reset, then the waiting time
}

// Each exchange and the reset cost one rtt; polling adds idle time.
TEST(Modem, VirtualTimeAccounting) {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 20; ++i) {
    const std::int64_t rtt = static_cast<std::int64_t>(rng() % 1500);
    const auto report = run_demo(rtt, true);
    ASSERT_TRUE(report.ok()) << rtt;
    EXPECT_EQ(report.elapsed_ms, (1 + static_cast<std::int64_t>(report.exchanges)) * rtt + report.idle_ms);
    EXPECT_EQ(report.exchanges, 12u);
    EXPECT_EQ(report.idle_ms, 2000);
  }
}

TEST(Modem, JitterIsSeeded) {
  const auto a = run_demo(200, true, 80);
  const auto b = run_demo(200, true, 80);
  EXPECT_EQ(a.elapsed_ms, b.elapsed_ms);
  EXPECT_TRUE(a.ok());
}

TEST(Script, Parse) {
  EXPECT_EQ(parse_script("full"), full_script());
  const std::vector<Phase> want = {phase::Reset{}, phase::AuthenticateLoop{3},
                                   phase::StatusPollLoop{50, 2}, phase::StatusPollLoop{7, 3},
                                   phase::ProactiveFetchLoop{}};
  EXPECT_EQ(parse_script("reset,auth:3,status:50:2,status:7,proactive"), want);
  for (const char* bad : {"", "reset,", "nope", "auth:x", "auth:-1", "reset:1", "status:1:2:3"}) {
    EXPECT_THROW(parse_script(bad), std::invalid_argument) << bad;
  }
}

TEST(Sweep, MedianAndDecimal) {
  EXPECT_DOUBLE_EQ(median({3, 1, 2}), 2.0);
  EXPECT_DOUBLE_EQ(median({4, 1, 3, 2}), 2.5);
  EXPECT_EQ(format_decimal(1.0), "1.0");
  EXPECT_EQ(format_decimal(0.0), "0.0");
  EXPECT_EQ(format_decimal(0.25), "0.25");
  EXPECT_EQ(format_decimal(2000.0), "2000.0");
}

TEST(Sweep, StallKeepsEveryRttAlive) {
  SweepConfig with;
  with.rtt_grid = {0, 150, 300, 600, 900};
  with.stall = {true, 100};
  SweepConfig without = with;
  without.stall.enabled = false;
  const auto a = lab_sweep(with);
  const auto b = lab_sweep(without);
  ASSERT_EQ(a.size(), 5u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].success_rate, 1.0) << a[i].rtt_ms;
    EXPECT_EQ(b[i].success_rate, b[i].rtt_ms > 300 ? 0.0 : 1.0) << b[i].rtt_ms;
    EXPECT_GE(a[i].success_rate, b[i].success_rate);
    if (i > 0) {
      EXPECT_LE(a[i].success_rate, a[i - 1].success_rate);
      EXPECT_LE(b[i].success_rate, b[i - 1].success_rate);
    }
  }
  EXPECT_EQ(a[0].median_elapsed_ms, 2000.0);
  EXPECT_EQ(a[1].median_elapsed_ms, 2000.0 + 13 * 150);
}

TEST(Sweep, CsvFormat) {
  const std::vector<SweepRow> rows = {{0, false, 1.0, 2000.0}, {600, true, 0.5, 10400.5}};
  EXPECT_EQ(sweep_csv(rows),
            "rtt_ms,stall,success_rate,median_elapsed_ms\n0,off,1.0,2000.0\n600,on,0.5,10400.5\n");
  EXPECT_FALSE(sweep_table(rows).empty());
  SweepConfig bad;
  EXPECT_THROW(lab_sweep(bad), std::invalid_argument);
  bad.rtt_grid = {0};
  bad.repetitions = 0;
  EXPECT_THROW(lab_sweep(bad), std::invalid_argument);
}
