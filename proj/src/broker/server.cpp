#include "simlink/broker/server.hpp"

#include <spdlog/spdlog.h>

namespace simlink::broker {

using nlohmann::json;
using std::chrono::milliseconds;

namespace {
constexpr milliseconds kPoll{100};
}

BrokerServer::BrokerServer(BrokerService& service, const net::Endpoint& listen,
                           milliseconds sweep_interval)
    : service_(service), listener_(listen), sweep_interval_(sweep_interval) {
  acceptor_ = std::thread([this] { accept_loop(); });
  sweeper_ = std::thread([this] { sweep_loop(); });
}

BrokerServer::~BrokerServer() { stop(); }

void BrokerServer::stop() {
  if (stopping_.exchange(true)) return;
  acceptor_.join();
  sweeper_.join();
  listener_.close();
  std::lock_guard lock(mu_);
  for (auto& c : connections_) c.thread.join();
  connections_.clear();
}

void BrokerServer::accept_loop() {
  while (!stopping_) {
    auto stream = listener_.accept(kPoll);
    std::lock_guard lock(mu_);
    for (auto it = connections_.begin(); it != connections_.end();) {
      if (*it->done) {
        it->thread.join();
        it = connections_.erase(it);
      } else {
        ++it;
      }
    }
    if (!stream) continue;
    auto done = std::make_shared<std::atomic<bool>>(false);
    connections_.push_back(
        {std::thread([this, done, s = std::move(stream)]() mutable {
           serve(std::move(s));
           *done = true;
         }),
         done});
  }
}

void BrokerServer::sweep_loop() {
  auto next = std::chrono::steady_clock::now() + sweep_interval_;
  while (!stopping_) {
    std::this_thread::sleep_for(std::min(kPoll, sweep_interval_));
    if (std::chrono::steady_clock::now() < next) continue;
    next += sweep_interval_;
    try {
      auto freed = service_.run([](Registry& reg, TimeMs now) { return reg.expire_sweep(now); });
      for (const auto& iccid : freed) spdlog::info("lease on {} expired", iccid);
    } catch (const std::exception& e) {
      spdlog::warn("sweep failed: {}", e.what());
    }
  }
}

void BrokerServer::serve(std::unique_ptr<net::TcpStream> stream) {
  net::LineReader reader(*stream);
  try {
    while (!stopping_) {
      auto line = reader.poll(kPoll);
      if (!line) {
        if (reader.eof()) return;
        continue;
      }
      auto request = json::parse(*line, nullptr, false);
      json reply;
      if (request.is_discarded()) {
        reply = {{"ok", false}, {"error", "InvalidArgument"}, {"detail", "malformed JSON"}};
      } else {
        reply = service_.handle(request);
      }
      const auto text = reply.dump() + "\n";
      stream->write_all(ByteView(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
    }
  } catch (const net::TransportError& e) {
    spdlog::debug("control connection dropped: {}", e.what());
  }
}

}  // namespace simlink::broker
