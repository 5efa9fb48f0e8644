#include "simlink/lab/modem.hpp"

#include <algorithm>
#include <random>

#include <fmt/format.h>

#include "simlink/apdu/atr.hpp"
#include "simlink/apdu/ins.hpp"
#include "simlink/tracer/tracer.hpp"
#include "simlink/vsim/file_system.hpp"
#include "simlink/vsim/identity.hpp"
#include "simlink/vsim/proactive.hpp"
#include "simlink/vsim/virtual_sim.hpp"

namespace simlink::lab {

namespace ins = apdu::ins;
using apdu::CommandApdu;
using apdu::ResponseApdu;

namespace {

constexpr std::uint8_t kClaIso = 0x00;
constexpr std::uint8_t kClaUicc = 0x80;
constexpr std::uint8_t kNoResponseData = 0x0C;
constexpr unsigned kMaxProactiveRounds = 256;

struct Abort {
  FailureKind kind;
  std::string detail;
};

CommandApdu select_fid(std::uint16_t fid) {
  return {kClaIso, ins::kSelect, 0x00, kNoResponseData,
          Bytes{static_cast<std::uint8_t>(fid >> 8), static_cast<std::uint8_t>(fid)}};
}

CommandApdu read_binary(std::uint16_t length) {
  return {kClaIso, ins::kReadBinary, 0x00, 0x00, {}, length};
}

// One length-prefixed field of the AUTHENTICATE response.
template <std::size_t N>
std::array<std::uint8_t, N> take(const Bytes& data, std::size_t& pos) {
  if (pos + 1 + N > data.size() || data[pos] != N) {
    throw Abort{FailureKind::AuthFailed, "malformed AUTHENTICATE response"};
  }
  std::array<std::uint8_t, N> out{};
  std::copy_n(data.begin() + static_cast<std::ptrdiff_t>(pos + 1), N, out.begin());
  pos += 1 + N;
  return out;
}

class Runner {
 public:
  Runner(const ModemConfig& cfg, CardLink& link, tracer::Tracer* observer)
      : cfg_(cfg), link_(link), observer_(observer), rng_(cfg.rand_seed), last_sqn_(cfg.last_sqn) {}

  SessionReport run() {
    for (const auto& p : cfg_.script) {
      phase_ = phase_name(p);
      try {
        std::visit([&](const auto& ph) { step(ph); }, p);
      } catch (const Abort& a) {
        report_.failure = Failure{a.kind, phase_, a.detail};
        break;
      }
      report_.completed.push_back(phase_);
    }
    report_.aka_ok = cfg_.verify_aka && auth_rounds_ > 0 && auth_verified_ == auth_rounds_;
    return report_;
  }

 private:
  ResponseApdu exchange_once(const CommandApdu& cmd) {
    Exchange ex{ResponseApdu(0x6F, 0x00), 0};
    try {
      ex = link_.transmit(cmd);
    } catch (const std::exception& e) {
      throw Abort{FailureKind::ProtocolViolation, fmt::format("link: {}", e.what())};
    }
    WalkOutcome walk;
    try {
      walk = walk_t0_timeline(cmd.ins(), t0_timeline(cmd, ex.response, ex.latency_ms, cfg_.stall),
                              cfg_.waiting_time_ms);
    } catch (const apdu::ApduError& e) {
      throw Abort{FailureKind::ProtocolViolation, e.what()};
    }
    report_.elapsed_ms += walk.elapsed_ms;
    ++report_.exchanges;
    if (!walk.completed) {
      throw Abort{FailureKind::TimeoutExpired,
                  fmt::format("{} got no procedure byte within {} ms",
                              ins::name(cmd.ins()).value_or("command"), cfg_.waiting_time_ms)};
    }
    if (observer_) observer_->observe(cmd, ex.response);
    return ex.response;
  }

  // Follows 61xx with GET RESPONSE and 6Cxx with a corrected Le.
  ResponseApdu exchange(const CommandApdu& cmd) {
    auto resp = exchange_once(cmd);
    if (resp.sw1() == 0x61) {
      const std::uint16_t n = resp.sw2() == 0 ? 256 : resp.sw2();
      resp = exchange_once(CommandApdu(kClaIso, ins::kGetResponse, 0x00, 0x00, {}, n));
    } else if (resp.sw1() == 0x6C) {
      const std::uint16_t n = resp.sw2() == 0 ? 256 : resp.sw2();
      resp = exchange_once(CommandApdu(cmd.cla(), cmd.ins(), cmd.p1(), cmd.p2(), cmd.data(), n));
    }
    if (resp.sw1() == 0x91) {
      proactive_pending_ = resp.sw2();
    } else if (resp.sw1() == 0x90) {
      proactive_pending_.reset();
    }
    return resp;
  }

  ResponseApdu expect_ok(const CommandApdu& cmd) {
    auto resp = exchange(cmd);
    if (resp.sw1() != 0x90 && resp.sw1() != 0x91) {
      throw Abort{FailureKind::CardError,
                  fmt::format("{} returned {:04X}", ins::name(cmd.ins()).value_or("command"),
                              resp.sw())};
    }
    return resp;
  }

  void step(const phase::Reset&) {
    ResetResult r;
    try {
      r = link_.reset();
    } catch (const std::exception& e) {
      throw Abort{FailureKind::ProtocolViolation, fmt::format("link: {}", e.what())};
    }
    report_.elapsed_ms += r.latency_ms;
    proactive_pending_.reset();
    try {
      apdu::parse_atr(r.atr);
    } catch (const apdu::ApduError& e) {
      throw Abort{FailureKind::ProtocolViolation, fmt::format("bad ATR: {}", e.what())};
    }
  }

  void step(const phase::ReadIccid&) {
    expect_ok(select_fid(vsim::kFidIccid));
    auto resp = expect_ok(read_binary(10));
    try {
      report_.iccid = vsim::decode_iccid(resp.data());
    } catch (const std::exception& e) {
      throw Abort{FailureKind::CardError, fmt::format("undecodable ICCID: {}", e.what())};
    }
  }

  void step(const phase::SelectUsim&) {
    expect_ok(CommandApdu(kClaIso, ins::kSelect, 0x04, kNoResponseData, vsim::usim_aid()));
  }

  void step(const phase::ReadImsi&) {
    expect_ok(select_fid(vsim::kFidImsi));
    auto resp = expect_ok(read_binary(9));
    try {
      report_.imsi = vsim::decode_imsi(resp.data());
    } catch (const std::exception& e) {
      throw Abort{FailureKind::CardError, fmt::format("undecodable IMSI: {}", e.what())};
    }
  }

  void step(const phase::AuthenticateLoop& loop) {
    for (unsigned round = 0; round < loop.rounds; ++round) {
      vsim::Block16 rand{};
      for (auto& b : rand) b = static_cast<std::uint8_t>(rng_());
      Bytes data{0x10};
      data.insert(data.end(), rand.begin(), rand.end());
      ++auth_rounds_;
      auto resp = expect_ok(
          CommandApdu(kClaIso, ins::kAuthenticate, 0x00, vsim::kAuth3gContext, std::move(data)));

      const auto& body = resp.data();
      if (body.empty() || body[0] != vsim::kAuthSuccessTag) {
        throw Abort{FailureKind::AuthFailed, "AUTHENTICATE did not succeed"};
      }
      std::size_t pos = 1;
      vsim::AkaVector got;
      got.res = take<8>(body, pos);
      got.ck = take<16>(body, pos);
      got.ik = take<16>(body, pos);
      got.autn = take<16>(body, pos);
      if (pos != body.size()) throw Abort{FailureKind::AuthFailed, "trailing AUTHENTICATE data"};

      if (!cfg_.verify_aka) continue;
      const auto sqn = vsim::recover_sqn(cfg_.k, cfg_.op_salt, rand, got.autn);
      if (sqn <= last_sqn_) {
        throw Abort{FailureKind::AuthFailed,
                    fmt::format("sequence number {} not above {}", sqn, last_sqn_)};
      }
      if (vsim::toy_aka(cfg_.k, cfg_.op_salt, rand, sqn) != got) {
        throw Abort{FailureKind::AuthFailed, "RES/AUTN mismatch"};
      }
      last_sqn_ = sqn;
      ++auth_verified_;
    }
  }

  void step(const phase::StatusPollLoop& loop) {
    for (unsigned i = 0; i < loop.count; ++i) {
      if (i > 0) {
        report_.elapsed_ms += loop.period_ms;
        report_.idle_ms += loop.period_ms;
      }
      expect_ok(CommandApdu(kClaUicc, ins::kStatus, 0x00, kNoResponseData));
    }
  }

  void step(const phase::ProactiveFetchLoop&) {
    for (unsigned round = 0; proactive_pending_ && round < kMaxProactiveRounds; ++round) {
      const std::uint16_t len = *proactive_pending_ == 0 ? 256 : *proactive_pending_;
      auto fetched = expect_ok(CommandApdu(kClaUicc, ins::kFetch, 0x00, 0x00, {}, len));
      auto details = vsim::parse_proactive_command(fetched.data());
      if (!details) throw Abort{FailureKind::ProtocolViolation, "unparseable proactive command"};
      ++report_.proactive_fetched;
      expect_ok(CommandApdu(kClaUicc, ins::kTerminalResponse, 0x00, 0x00,
                            vsim::build_terminal_response(*details)));
    }
  }

  const ModemConfig& cfg_;
  CardLink& link_;
  tracer::Tracer* observer_;
  std::mt19937_64 rng_;
  std::uint64_t last_sqn_;
  std::optional<std::uint8_t> proactive_pending_;
  unsigned auth_rounds_ = 0;
  unsigned auth_verified_ = 0;
  std::string phase_;
  SessionReport report_;
};

std::vector<std::string> split(const std::string& text, char sep) {
  // Keeps empty fields, including a trailing one.
  std::vector<std::string> parts;
  std::size_t start = 0;
  for (std::size_t pos; (pos = text.find(sep, start)) != std::string::npos; start = pos + 1) {
    parts.push_back(text.substr(start, pos - start));
  }
  parts.push_back(text.substr(start));
  return parts;
}

long long parse_number(const std::string& s, const std::string& item) {
  std::size_t used = 0;
  long long v = -1;
  try {
    v = std::stoll(s, &used);
  } catch (const std::exception&) {
  }
  if (used != s.size() || v < 0) {
    throw std::invalid_argument(fmt::format("bad number '{}' in script item '{}'", s, item));
  }
  return v;
}

}  // namespace

std::string phase_name(const Phase& p) {
  static constexpr const char* kNames[] = {"Reset",           "ReadIccid",      "SelectUsim",
                                           "ReadImsi",        "AuthenticateLoop", "StatusPollLoop",
                                           "ProactiveFetchLoop"};
  return kNames[p.index()];
}

std::vector<Phase> full_script() {
  return {phase::Reset{},        phase::ReadIccid{},        phase::SelectUsim{},
          phase::ReadImsi{},     phase::AuthenticateLoop{1}, phase::StatusPollLoop{1000, 3},
          phase::ProactiveFetchLoop{}};
}

std::vector<Phase> parse_script(const std::string& text) {
  if (text == "full") return full_script();
  std::vector<Phase> script;
  for (const auto& item : split(text, ',')) {
    auto fields = split(item, ':');
    if (fields[0].empty()) throw std::invalid_argument("empty script item");
    const auto& name = fields[0];
    const auto arg = [&](std::size_t i, long long fallback) {
      return fields.size() > i ? parse_number(fields[i], item) : fallback;
    };
    std::size_t max_fields = 1;
    if (name == "reset") {
      script.push_back(phase::Reset{});
    } else if (name == "iccid") {
      script.push_back(phase::ReadIccid{});
    } else if (name == "usim") {
      script.push_back(phase::SelectUsim{});
    } else if (name == "imsi") {
      script.push_back(phase::ReadImsi{});
    } else if (name == "auth") {
      max_fields = 2;
      script.push_back(phase::AuthenticateLoop{static_cast<unsigned>(arg(1, 1))});
    } else if (name == "status") {
      max_fields = 3;
      script.push_back(phase::StatusPollLoop{arg(1, 1000), static_cast<unsigned>(arg(2, 3))});
    } else if (name == "proactive") {
      script.push_back(phase::ProactiveFetchLoop{});
    } else {
      throw std::invalid_argument(fmt::format("unknown script item '{}'", item));
    }
    if (fields.size() > max_fields) {
      throw std::invalid_argument(fmt::format("too many arguments in '{}'", item));
    }
  }
  if (script.empty()) throw std::invalid_argument("empty script");
  return script;
}

ModemConfig ModemConfig::for_profile(const vsim::SimProfile& profile) {
  ModemConfig cfg;
  cfg.k = profile.k;
  cfg.op_salt = profile.op_salt;
  cfg.last_sqn = profile.sqn;
  return cfg;
}

std::string_view to_string(FailureKind kind) noexcept {
  switch (kind) {
    case FailureKind::TimeoutExpired:
      return "TimeoutExpired";
    case FailureKind::ProtocolViolation:
      return "ProtocolViolation";
    case FailureKind::AuthFailed:
      return "AuthFailed";
    case FailureKind::CardError:
      return "CardError";
  }
  return "Unknown";
}

nlohmann::json to_json(const SessionReport& report) {
  nlohmann::json j{{"completed", report.completed},
                   {"aka_ok", report.aka_ok},
                   {"elapsed_ms", report.elapsed_ms},
                   {"exchanges", report.exchanges},
                   {"proactive_fetched", report.proactive_fetched},
                   {"failure", nullptr}};
  if (report.failure) {
    j["failure"] = {{"kind", to_string(report.failure->kind)},
                    {"phase", report.failure->phase},
                    {"detail", report.failure->detail}};
  }
  if (report.iccid) j["iccid"] = *report.iccid;
  if (report.imsi) j["imsi"] = *report.imsi;
  return j;
}

SessionReport run_session(const ModemConfig& modem, CardLink& link, tracer::Tracer* observer) {
  return Runner(modem, link, observer).run();
}

}  // namespace simlink::lab
