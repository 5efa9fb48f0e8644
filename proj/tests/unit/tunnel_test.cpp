#include <gtest/gtest.h>

#include <atomic>
#include <random>
#include <thread>

#include "oracles.hpp"
#include "simlink/apdu/apdu.hpp"
#include "simlink/tunnel/frame.hpp"
#include "simlink/tunnel/peer.hpp"
#include "simlink/tunnel/session.hpp"

using namespace simlink;
using namespace simlink::tunnel;
using apdu::CommandApdu;
using apdu::ResponseApdu;

namespace {

FrameErrc frame_error_of(auto&& fn) {
  try {
    fn();
  } catch (const FrameError& e) {
    return e.code();
  }
  ADD_FAILURE() << "no FrameError thrown";
  return FrameErrc::Truncated;
}

StepResult send(const SessionState& s, Request r, std::int64_t now = 0) {
  return session_step(s, event::SendRequested{std::move(r), now});
}

StepResult arrive(const SessionState& s, TunnelFrame f, std::int64_t now = 0) {
  return session_step(s, event::FrameArrived{std::move(f), now});
}

// Feeds each frame of `frames` to `s`, collecting what comes back.
StepResult arrive_all(SessionState s, const std::vector<TunnelFrame>& frames,
                      std::int64_t now = 0) {
  StepResult total{s, {}, {}, {}};
  for (const auto& f : frames) {
    auto r = arrive(total.state, f, now);
    total.state = r.state;
    total.frames.insert(total.frames.end(), r.frames.begin(), r.frames.end());
    total.deliveries.insert(total.deliveries.end(), r.deliveries.begin(), r.deliveries.end());
    total.violations.insert(total.violations.end(), r.violations.begin(), r.violations.end());
  }
  return total;
}

struct Pair {
  SessionState probe;
  SessionState provider;
};

Pair established_pair(std::uint32_t session_id = 7) {
  auto hello = send(SessionState::probe(session_id), request::Hello{"tok"});
  auto at_provider = arrive_all(SessionState::provider(), hello.frames);
  auto accept = send(at_provider.state, request::AcceptHello{});
  auto at_probe = arrive_all(hello.state, accept.frames);
  return {at_probe.state, accept.state};
}

const CommandApdu kSelectMf{0x00, 0xA4, 0x00, 0x0C, {0x3F, 0x00}};

}  // namespace

TEST(Frame, KeepaliveExample) {
  EXPECT_EQ(to_hex(frame_encode(TunnelFrame(MessageType::Keepalive, 1, 0))),
            "4D410107000000010000000000" "00");
}

TEST(Frame, Errors) {
  auto good = frame_encode(TunnelFrame(MessageType::Keepalive, 1, 0, {0xAA}));
  auto bad_magic = good;
  bad_magic[1] = 0x42;
  EXPECT_EQ(frame_error_of([&] { frame_decode(bad_magic); }), FrameErrc::BadMagic);
  auto bad_version = good;
  bad_version[2] = 0x02;
  EXPECT_EQ(frame_error_of([&] { frame_decode(bad_version); }), FrameErrc::BadVersion);
  auto oversize = good;
  oversize[12] = 0x10;
  oversize[13] = 0x01;
  EXPECT_EQ(frame_error_of([&] { frame_try_decode(oversize); }), FrameErrc::Oversize);
  EXPECT_EQ(frame_error_of([&] { frame_encode(1, 0, 0, Bytes(4097, 0)); }), FrameErrc::Oversize);
  good.pop_back();
  EXPECT_EQ(frame_error_of([&] { frame_decode(good); }), FrameErrc::Truncated);
  EXPECT_FALSE(frame_try_decode(good));
}

TEST(Frame, FuzzRoundTripConsumesExactly) {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 2000; ++i) {
    const auto f = oracle::random_frame(rng);
    auto wire = frame_encode(f);
    const auto trailing = oracle::random_bytes(rng, rng() % 5);
    wire.insert(wire.end(), trailing.begin(), trailing.end());
    const auto d = frame_decode(wire);
    ASSERT_EQ(d.frame, f);
    ASSERT_EQ(d.consumed, kHeaderSize + f.payload.size());
  }
  EXPECT_NO_THROW(frame_encode(1, 0, 0, Bytes(kMaxPayload, 0)));
}

TEST(Frame, ArbitrarySegmentationReassembles) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<TunnelFrame> frames;
    Bytes stream;
    for (int i = 0; i < 20; ++i) {
      frames.push_back(oracle::random_frame(rng));
      const auto w = frame_encode(frames.back());
      stream.insert(stream.end(), w.begin(), w.end());
    }
    FrameReader reader;
    std::vector<TunnelFrame> got;
    std::size_t pos = 0;
    while (pos < stream.size()) {
      const std::size_t n = std::min<std::size_t>(1 + rng() % 64, stream.size() - pos);
      const auto out = reader.feed(ByteView(stream).subspan(pos, n));
      got.insert(got.end(), out.begin(), out.end());
      pos += n;
    }
    EXPECT_EQ(got, frames);
    EXPECT_FALSE(reader.mid_frame());
    EXPECT_NO_THROW(reader.finish());
  }
  FrameReader partial;
  partial.feed(Bytes{0x4D, 0x41, 0x01});
  EXPECT_EQ(frame_error_of([&] { partial.finish(); }), FrameErrc::Truncated);
}

TEST(Session, HandshakeEstablishesBothEnds) {
  const auto p = established_pair();
  EXPECT_EQ(p.probe.phase, Phase::Established);
  EXPECT_EQ(p.provider.phase, Phase::Established);
  EXPECT_EQ(p.provider.session_id, 7u);
}

TEST(Session, HelloCarriesToken) {
  auto hello = send(SessionState::probe(3), request::Hello{"secret"});
  ASSERT_EQ(hello.frames.size(), 1u);
  auto at_provider = arrive_all(SessionState::provider(), hello.frames);
  ASSERT_EQ(at_provider.deliveries.size(), 1u);
  EXPECT_EQ(std::get<delivery::HelloReceived>(at_provider.deliveries[0]).token, "secret");
}

TEST(Session, RejectedHelloClosesWithError) {
  auto hello = send(SessionState::probe(3), request::Hello{"bad"});
  auto at_provider = arrive_all(SessionState::provider(), hello.frames);
  auto reject = send(at_provider.state, request::RejectHello{"lease token rejected"});
  EXPECT_EQ(reject.state.phase, Phase::Closed);
  ASSERT_EQ(reject.frames.size(), 1u);
  EXPECT_EQ(reject.frames[0].type(), MessageType::Error);
  auto at_probe = arrive_all(hello.state, reject.frames);
  EXPECT_EQ(at_probe.state.phase, Phase::Closed);
}

TEST(Session, ApduRequestSetsInFlight) {
  auto p = established_pair();
  const auto r = send(p.probe, request::Apdu{kSelectMf});
  ASSERT_EQ(r.frames.size(), 1u);
  EXPECT_EQ(r.frames[0].type(), MessageType::ApduReq);
  EXPECT_EQ(r.frames[0].payload, apdu::encode_command(kSelectMf));
  EXPECT_EQ(r.frames[0].seq, p.probe.next_tx_seq);
  ASSERT_TRUE(r.state.in_flight);
  EXPECT_THROW(send(r.state, request::Apdu{kSelectMf}), SessionUsageError);
}

TEST(Session, ResponsePayloadIsDataThenStatus) {
  auto p = established_pair();
  const auto req = send(p.probe, request::Apdu{kSelectMf});
  const auto at_provider = arrive_all(p.provider, req.frames);
  const auto resp = send(at_provider.state, request::Response{ResponseApdu({0x01, 0x02}, 0x91, 0x0C)});
  ASSERT_EQ(resp.frames.size(), 1u);
  EXPECT_EQ(to_hex(resp.frames[0].payload), "0102910C");
  const auto back = arrive_all(req.state, resp.frames);
  ASSERT_EQ(back.deliveries.size(), 1u);
  EXPECT_EQ(std::get<delivery::ResponseReceived>(back.deliveries[0]).response,
            ResponseApdu({0x01, 0x02}, 0x91, 0x0C));
  EXPECT_FALSE(back.state.in_flight);
}

TEST(Session, ApduReqWhileInFlightBreaksAlternation) {
  auto p = established_pair();
  auto req = send(p.probe, request::Apdu{kSelectMf});
  auto first = arrive_all(p.provider, req.frames);
  // A second request frame with the next sequence number.
  TunnelFrame again(MessageType::ApduReq, 7, req.frames[0].seq + 1, apdu::encode_command(kSelectMf));
  auto r = arrive(first.state, again);
  ASSERT_EQ(r.violations, std::vector<Violation>{Violation::AlternationBroken});
  EXPECT_EQ(r.state.phase, Phase::Closed);
  ASSERT_EQ(r.frames.size(), 1u);
  EXPECT_EQ(r.frames[0].type(), MessageType::Error);
  EXPECT_TRUE(std::holds_alternative<delivery::Closed>(r.deliveries.back()));
}

TEST(Session, OutOfOrderResponseDeliversNothing) {
  auto p = established_pair();
  TunnelFrame stray(MessageType::ApduResp, 7, p.probe.next_rx_seq, {0x90, 0x00});
  auto r = arrive(p.probe, stray);
  EXPECT_EQ(r.violations, std::vector<Violation>{Violation::AlternationBroken});
  EXPECT_EQ(r.state.phase, Phase::Closed);
  for (const auto& d : r.deliveries) {
    EXPECT_FALSE(std::holds_alternative<delivery::ResponseReceived>(d));
  }
}

TEST(Session, SeqGapAndUnknownType) {
  auto p = established_pair();
  auto gap = arrive(p.probe, TunnelFrame(MessageType::Keepalive, 7, p.probe.next_rx_seq + 1,
                                         Bytes(8, 0)));
  EXPECT_EQ(gap.violations, std::vector<Violation>{Violation::SeqGap});
  auto unknown = arrive(p.probe, TunnelFrame(std::uint8_t{0x33}, 7, p.probe.next_rx_seq));
  EXPECT_EQ(unknown.violations, std::vector<Violation>{Violation::UnknownType});
  auto other = arrive(p.probe, TunnelFrame(MessageType::Keepalive, 8, p.probe.next_rx_seq, Bytes(8, 0)));
  EXPECT_EQ(other.violations, std::vector<Violation>{Violation::SessionMismatch});
}

TEST(Session, ClosedIgnoresFrames) {
  auto p = established_pair();
  auto closed = send(p.probe, request::Close{});
  EXPECT_EQ(closed.state.phase, Phase::Closed);
  auto r = arrive(closed.state, TunnelFrame(MessageType::ApduResp, 7, 99, {0x90, 0x00}));
  EXPECT_TRUE(r.frames.empty());
  EXPECT_TRUE(r.deliveries.empty());
  EXPECT_TRUE(r.violations.empty());
}

TEST(Session, TimerEmitsKeepaliveAndAckFeedsRtt) {
  auto p = established_pair();
  p.probe.last_keepalive_ms = 0;
  EXPECT_TRUE(session_step(p.probe, event::TimerFired{500}).frames.empty());
  auto tick = session_step(p.probe, event::TimerFired{1000});
  ASSERT_EQ(tick.frames.size(), 1u);
  EXPECT_EQ(tick.frames[0].type(), MessageType::Keepalive);
  auto echo = arrive_all(p.provider, tick.frames, 1010);
  ASSERT_EQ(echo.frames.size(), 1u);
  EXPECT_EQ(echo.frames[0].type(), MessageType::KeepaliveAck);
  auto back = arrive_all(tick.state, echo.frames, 1042);
  EXPECT_EQ(back.state.keepalive_acks, 1u);
  EXPECT_DOUBLE_EQ(rtt_estimate(back.state), 42.0);
}

TEST(Session, SequenceNumbersAdvanceByOne) {
  auto p = established_pair();
  std::uint32_t expected = p.probe.next_tx_seq;
  for (int i = 0; i < 5; ++i) {
    auto req = send(p.probe, request::Apdu{kSelectMf});
    ASSERT_EQ(req.frames[0].seq, expected++);
    auto prov = arrive_all(p.provider, req.frames);
    auto resp = send(prov.state, request::Response{ResponseApdu(0x90, 0x00)});
    auto back = arrive_all(req.state, resp.frames);
    ASSERT_TRUE(back.violations.empty());
    p = {back.state, resp.state};
  }
}

TEST(RttEstimate, Examples) {
  SessionState s;
  EXPECT_THROW(rtt_estimate(s), NoSamples);
  s.rtt_samples = {{0, 100}};
  EXPECT_DOUBLE_EQ(rtt_estimate(s), 100.0);
  s.rtt_samples = {{0, 80}, {0, 100}, {0, 400}};
  EXPECT_DOUBLE_EQ(rtt_estimate(s), 100.0);
  s.rtt_samples = {{0, 80}, {0, 100}};
  EXPECT_DOUBLE_EQ(rtt_estimate(s), 90.0);
}

TEST(RttEstimate, WindowKeepsLastSixteen) {
  auto p = established_pair();
  auto s = p.probe;
  for (int i = 0; i < 40; ++i) {
    Bytes sent(8, 0);
    sent[7] = 0;  // sent at 0 ms
    auto r = arrive(s, TunnelFrame(MessageType::KeepaliveAck, 7, s.next_rx_seq, sent), i < 24 ? 1000 : 5);
    s = r.state;
  }
  EXPECT_EQ(s.rtt_samples.size(), kRttWindow);
  EXPECT_DOUBLE_EQ(rtt_estimate(s), 5.0);
}

namespace {

// Provider end on a thread that echoes command data back with 9000.
struct EchoProvider {
  std::thread thread;
  std::atomic<bool> stop{false};
  std::atomic<unsigned> commands{0};

  explicit EchoProvider(std::unique_ptr<net::ByteStream> stream) {
    thread = std::thread([this, s = std::move(stream)]() mutable {
      TunnelPeer peer(std::move(s), SessionState::provider());
      ProviderHandlers h;
      h.accept_token = [](const std::string& t) { return t == "good"; };
      h.on_reset = [] { return from_hex("3B00"); };
      h.on_command = [this](const CommandApdu& c) {
        ++commands;
        return ResponseApdu(c.data(), 0x90, 0x00);
      };
      serve_provider_session(peer, h, [this] { return stop.load(); });
    });
  }
  ~EchoProvider() {
    stop = true;
    thread.join();
  }
};

}  // namespace

TEST(Peer, ThousandRelayedApdusInOrder) {
  auto [probe_end, provider_end] = net::make_loopback_pair();
  EchoProvider provider(std::move(provider_end));
  ProbeTunnel tunnel(std::move(probe_end), 11);
  tunnel.handshake("good");
  EXPECT_EQ(tunnel.reset().t0, 0x00);
  for (std::uint32_t i = 0; i < 1000; ++i) {
    const Bytes data{static_cast<std::uint8_t>(i >> 8), static_cast<std::uint8_t>(i)};
    const auto r = tunnel.transmit(CommandApdu(0x00, 0xD6, 0x00, 0x00, data));
    ASSERT_EQ(r.data(), data);
    ASSERT_EQ(r.sw(), 0x9000);
  }
  EXPECT_EQ(provider.commands.load(), 1000u);
  tunnel.close();
}

TEST(Peer, LoopbackRttEstimateUnderFiveMs) {
  auto [probe_end, provider_end] = net::make_loopback_pair();
  EchoProvider provider(std::move(provider_end));
  ProbeTunnel tunnel(std::move(probe_end), 12);
  tunnel.handshake("good");
  double estimate = 0;
  for (int i = 0; i < 5; ++i) estimate = tunnel.ping();
  EXPECT_LT(estimate, 5.0);
  tunnel.close();
}

TEST(Peer, BadTokenIsRefused) {
  auto [probe_end, provider_end] = net::make_loopback_pair();
  EchoProvider provider(std::move(provider_end));
  ProbeTunnel tunnel(std::move(probe_end), 13);
  EXPECT_THROW(tunnel.handshake("bad", std::chrono::milliseconds(2000)), TunnelError);
}

TEST(Peer, InjectedDuplicateResponseEndsSession) {
  auto [probe_end, raw_end] = net::make_loopback_pair();
  ProbeTunnel tunnel(std::move(probe_end), 21);
  std::thread fake([s = std::move(raw_end)]() mutable {
    FrameReader reader;
    std::uint32_t seq = 0;
    std::uint8_t buf[512];
    for (;;) {
      auto n = s->read_some(buf, std::chrono::milliseconds(2000));
      if (!n || *n == 0) return;
      for (const auto& f : reader.feed(ByteView(buf, *n))) {
        if (f.type() == MessageType::Hello) {
          s->write_all(frame_encode(TunnelFrame(MessageType::HelloAck, 21, seq++)));
        } else if (f.type() == MessageType::ApduReq) {
          // Answer twice: the second one arrives with nothing in flight.
          // One write so both land in the same read.
          auto both = frame_encode(TunnelFrame(MessageType::ApduResp, 21, seq++, {0x90, 0x00}));
          const auto dup = frame_encode(TunnelFrame(MessageType::ApduResp, 21, seq++, {0x6F, 0x00}));
          both.insert(both.end(), dup.begin(), dup.end());
          s->write_all(both);
        } else if (f.type() == MessageType::Error || f.type() == MessageType::Close) {
          return;
        }
      }
    }
  });
  tunnel.handshake("x");
  EXPECT_EQ(tunnel.transmit(kSelectMf).sw(), 0x9000);
  EXPECT_THROW(tunnel.transmit(kSelectMf, std::chrono::milliseconds(2000)), TunnelError);
  EXPECT_EQ(tunnel.state().phase, Phase::Closed);
  EXPECT_EQ(tunnel.state().violation, Violation::AlternationBroken);
  fake.join();
}
