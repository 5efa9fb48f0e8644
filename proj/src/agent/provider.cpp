#include "simlink/agent/provider.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "simlink/apdu/atr.hpp"
#include "simlink/broker/client.hpp"
#include "simlink/tunnel/peer.hpp"

namespace simlink::agent {

using std::chrono::milliseconds;

ProviderServer::ProviderServer(ProviderConfig config)
    : config_(std::move(config)), sim_(config_.profile), listener_(config_.listen) {
  const auto advertised = config_.advertise.value_or(listener_.local_endpoint().to_string());
  broker::BrokerClient(config_.broker, config_.token)
      .register_sim(config_.profile.iccid, config_.tags, advertised);
  spdlog::info("SIM {} registered at {}, serving on {}", config_.profile.iccid,
               config_.broker.to_string(), advertised);
  acceptor_ = std::thread([this] { accept_loop(); });
}

ProviderServer::~ProviderServer() { stop(); }

void ProviderServer::stop() {
  if (stopping_.exchange(true)) return;
  acceptor_.join();
  listener_.close();
  {
    std::lock_guard lock(conn_mu_);
    for (auto& c : connections_) c.thread.join();
    connections_.clear();
  }
  try {
    broker::BrokerClient(config_.broker, config_.token, milliseconds(1000))
        .sim_offline(config_.profile.iccid);
  } catch (const std::exception& e) {
    spdlog::debug("could not mark {} offline: {}", config_.profile.iccid, e.what());
  }
}

void ProviderServer::accept_loop() {
  while (!stopping_) {
    auto stream = listener_.accept(milliseconds(100));
    std::lock_guard lock(conn_mu_);
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
    connections_.push_back({std::thread([this, done, s = std::move(stream)]() mutable {
                              serve(std::move(s));
                              *done = true;
                            }),
                            done});
  }
}

bool ProviderServer::lease_valid(const std::string& lease_token) {
  try {
    return broker::BrokerClient(config_.broker, config_.token)
        .validate_lease(lease_token, config_.profile.iccid);
  } catch (const std::exception& e) {
    spdlog::warn("lease check failed: {}", e.what());
    return false;
  }
}

std::shared_ptr<tracer::TraceSink> ProviderServer::sink_for(std::uint32_t session) {
  if (config_.trace_sinks) return config_.trace_sinks(session);
  if (config_.trace_dir) {
    return std::make_shared<tracer::JsonlFileSink>(*config_.trace_dir /
                                                   fmt::format("session-{}.jsonl", session));
  }
  return nullptr;
}

void ProviderServer::serve(std::unique_ptr<net::TcpStream> stream) {
  tunnel::TunnelPeer peer(std::move(stream), tunnel::SessionState::provider());
  std::unique_ptr<tracer::Tracer> trace;
  // Held for the whole session: one probe at a time drives the card.
  std::unique_lock sim_lock(sim_mu_, std::defer_lock);

  tunnel::ProviderHandlers handlers;
  handlers.accept_token = [&](const std::string& lease_token) {
    if (!lease_valid(lease_token)) {
      spdlog::warn("rejected session {}: no valid lease", peer.state().session_id);
      return false;
    }
    if (!sim_lock.try_lock()) {
      spdlog::warn("rejected session {}: SIM busy", peer.state().session_id);
      return false;
    }
    const auto session = peer.state().session_id;
    trace = std::make_unique<tracer::Tracer>(session, sink_for(session), config_.rules);
    ++sessions_served_;
    spdlog::info("session {} established", session);
    return true;
  };
  handlers.on_reset = [&] { return apdu::serialize_atr(sim_.reset()); };
  handlers.on_command = [&](const apdu::CommandApdu& cmd) {
    return trace->relay(cmd, [&](const apdu::CommandApdu& c) { return sim_.process(c); });
  };
  handlers.on_closed = [&](const tunnel::delivery::Closed& closed) {
    spdlog::info("session {} closed: {}", peer.state().session_id, closed.reason);
  };

  try {
    tunnel::serve_provider_session(peer, handlers, [this] { return stopping_.load(); });
  } catch (const std::exception& e) {
    spdlog::warn("session {} aborted: {}", peer.state().session_id, e.what());
  }
  if (trace) trace->close();
}

}  // namespace simlink::agent
