#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "simlink/apdu/apdu.hpp"
#include "simlink/tracer/decode.hpp"
#include "simlink/tracer/rewrite.hpp"
#include "simlink/tracer/trace_event.hpp"

namespace simlink::tracer {

class TraceSink {
 public:
  virtual ~TraceSink() = default;
  virtual void write(const TraceEvent& event) = 0;
};

// One JSON line per event, flushed as written. Truncates `path`.
class JsonlFileSink final : public TraceSink {
 public:
  explicit JsonlFileSink(const std::filesystem::path& path);
  void write(const TraceEvent& event) override;

 private:
  std::ofstream out_;
};

class MemorySink final : public TraceSink {
 public:
  void write(const TraceEvent& event) override;
  std::vector<TraceEvent> events() const;

 private:
  mutable std::mutex mu_;
  std::vector<TraceEvent> events_;
};

// Records one session. Events reach the sink in session order; those from
// a SEND SHORT MESSAGE fetch onwards are held back until the terminal
// acknowledges it (the fetch is then flagged silent_sms) or the session
// closes.
class Tracer {
 public:
  using Clock = std::function<std::int64_t()>;
  using Card = std::function<apdu::ResponseApdu(const apdu::CommandApdu&)>;

  Tracer(std::uint32_t session, std::shared_ptr<TraceSink> sink,
         std::vector<RewriteRule> rules = {}, Clock clock = {});
  ~Tracer();
  Tracer(const Tracer&) = delete;
  Tracer& operator=(const Tracer&) = delete;

  // Provider side: applies the rules around `card` and records both
  // directions. Returns what the modem gets.
  apdu::ResponseApdu relay(const apdu::CommandApdu& cmd, const Card& card);

  // Probe side: records an exchange as seen.
  void observe(const apdu::CommandApdu& cmd, const apdu::ResponseApdu& resp);

  // Releases held events. Idempotent.
  void close();

  std::size_t events_recorded() const noexcept { return recorded_; }

 private:
  std::int64_t now() const;
  void record(TraceEvent event);
  void emit(TraceEvent event);

  std::uint32_t session_;
  std::shared_ptr<TraceSink> sink_;
  std::vector<RewriteRule> rules_;
  Clock clock_;
  std::int64_t start_ms_ = 0;
  DecodeContext ctx_;
  std::vector<TraceEvent> held_;
  std::multimap<int, std::size_t> unacked_;  // command number -> index in held_
  std::size_t recorded_ = 0;
};

}  // namespace simlink::tracer
