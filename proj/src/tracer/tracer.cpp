#include "simlink/tracer/tracer.hpp"

#include <chrono>
#include <stdexcept>

#include <fmt/format.h>

#include "simlink/tracer/silent_sms.hpp"

namespace simlink::tracer {

JsonlFileSink::JsonlFileSink(const std::filesystem::path& path)
    : out_(path, std::ios::trunc) {
  if (!out_) throw std::runtime_error(fmt::format("cannot open trace file {}", path.string()));
}

void JsonlFileSink::write(const TraceEvent& event) {
  out_ << to_json(event).dump() << '\n';
  out_.flush();
}

void MemorySink::write(const TraceEvent& event) {
  std::lock_guard lock(mu_);
  events_.push_back(event);
}

std::vector<TraceEvent> MemorySink::events() const {
  std::lock_guard lock(mu_);
  return events_;
}

Tracer::Tracer(std::uint32_t session, std::shared_ptr<TraceSink> sink,
               std::vector<RewriteRule> rules, Clock clock)
    : session_(session), sink_(std::move(sink)), rules_(std::move(rules)), clock_(std::move(clock)) {
  if (!clock_) {
    clock_ = [] {
      return std::chrono::duration_cast<std::chrono::milliseconds>(
                 std::chrono::steady_clock::now().time_since_epoch())
          .count();
    };
  }
  start_ms_ = clock_();
}

Tracer::~Tracer() { close(); }

std::int64_t Tracer::now() const { return clock_() - start_ms_; }

apdu::ResponseApdu Tracer::relay(const apdu::CommandApdu& cmd, const Card& card) {
  TraceEvent m2s;
  m2s.ts_ms = now();
  m2s.dir = Direction::ModemToSim;
  m2s.raw = apdu::encode_command(cmd);
  m2s.decoded = decode_command_event(m2s.raw, ctx_);
  m2s.session = session_;
  const auto file = ctx_.current_file;
  record(std::move(m2s));

  std::optional<apdu::ResponseApdu> original;
  auto [resp, rule] = apply_rewrites(rules_, cmd, file, card, &original);

  TraceEvent s2m;
  s2m.ts_ms = now();
  s2m.dir = Direction::SimToModem;
  s2m.raw = apdu::encode_response(resp);
  s2m.decoded = decode_response_event(s2m.raw, ctx_);
  s2m.session = session_;
  if (rule) {
    s2m.rule_id = rule->rule_id;
    if (!original || *original != resp) {
      s2m.flags.insert(std::string(kFlagRewritten));
      if (original) s2m.original = apdu::encode_response(*original);
    }
  }
  record(std::move(s2m));
  return resp;
}

void Tracer::observe(const apdu::CommandApdu& cmd, const apdu::ResponseApdu& resp) {
  const auto ts = now();
  TraceEvent m2s;
  m2s.ts_ms = ts;
  m2s.dir = Direction::ModemToSim;
  m2s.raw = apdu::encode_command(cmd);
  m2s.decoded = decode_command_event(m2s.raw, ctx_);
  m2s.session = session_;
  record(std::move(m2s));

  TraceEvent s2m;
  s2m.ts_ms = ts;
  s2m.dir = Direction::SimToModem;
  s2m.raw = apdu::encode_response(resp);
  s2m.decoded = decode_response_event(s2m.raw, ctx_);
  s2m.session = session_;
  record(std::move(s2m));
}

void Tracer::record(TraceEvent event) {
  ++recorded_;
  if (is_terminal_response(event)) {
    auto [lo, hi] = unacked_.equal_range(*event.decoded.command_number);
    for (auto it = lo; it != hi; ++it) held_[it->second].flags.insert(std::string(kFlagSilentSms));
    unacked_.erase(lo, hi);
  }
  const bool opens_hold = is_sms_fetch(event);
  if (held_.empty() && !opens_hold) {
    emit(std::move(event));
    return;
  }
  if (opens_hold) unacked_.emplace(*event.decoded.command_number, held_.size());
  held_.push_back(std::move(event));
  if (unacked_.empty()) {
    for (auto& e : held_) emit(std::move(e));
    held_.clear();
  }
}

void Tracer::emit(TraceEvent event) {
  if (sink_) sink_->write(event);
}

void Tracer::close() {
  for (auto& e : held_) emit(std::move(e));
  held_.clear();
  unacked_.clear();
}

}  // namespace simlink::tracer
