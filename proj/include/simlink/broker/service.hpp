#pragma once

#include <condition_variable>
#include <deque>
#include <filesystem>
#include <functional>
#include <future>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include "json.hpp"
#include "simlink/broker/journal.hpp"
#include "simlink/broker/registry.hpp"

namespace simlink::broker {

using Clock = std::function<TimeMs()>;

// Milliseconds since the Unix epoch; lease times survive restarts.
TimeMs wall_clock_ms();

// One control request, {"op":..,"token":..,"body":{..}}, against the
// registry. Returns {"ok":true,...} or {"ok":false,"error":"<code>",
// "detail":..}. Never throws.
nlohmann::json dispatch(Registry& registry, const nlohmann::json& request, TimeMs now,
                        const std::string& shared_token);

// Owns a registry and serializes all access through one worker thread.
// With a state log, the log is replayed at construction, expired leases
// are swept, and every later event is appended.
class BrokerService {
 public:
  struct Options {
    std::string token;
    std::optional<std::filesystem::path> state_log;
    Clock clock = wall_clock_ms;
    std::optional<std::uint64_t> token_seed;
  };

  explicit BrokerService(Options options);
  ~BrokerService();
  BrokerService(const BrokerService&) = delete;
  BrokerService& operator=(const BrokerService&) = delete;

  nlohmann::json handle(const nlohmann::json& request);

  // Runs `fn(registry, now)` on the worker and returns its result.
  template <typename F>
  auto run(F&& fn) -> std::invoke_result_t<F&, Registry&, TimeMs> {
    using R = std::invoke_result_t<F&, Registry&, TimeMs>;
    auto task = std::make_shared<std::packaged_task<R()>>(
        [this, f = std::forward<F>(fn)]() mutable { return f(registry_, options_.clock()); });
    auto result = task->get_future();
    enqueue([task] { (*task)(); });
    return result.get();
  }

  RegistryState snapshot();

 private:
  void enqueue(std::function<void()> job);
  void worker_loop();

  Options options_;
  Registry registry_;
  std::unique_ptr<JournalWriter> journal_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::function<void()>> queue_;
  bool stopping_ = false;
  std::thread worker_;
};

}  // namespace simlink::broker
