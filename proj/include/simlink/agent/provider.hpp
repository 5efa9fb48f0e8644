#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>

#include "simlink/net/tcp.hpp"
#include "simlink/tracer/rewrite.hpp"
#include "simlink/tracer/tracer.hpp"
#include "simlink/vsim/profile.hpp"
#include "simlink/vsim/virtual_sim.hpp"

namespace simlink::agent {

using TraceSinkFactory = std::function<std::shared_ptr<tracer::TraceSink>(std::uint32_t session)>;

struct ProviderConfig {
  net::Endpoint broker;
  std::string token;
  vsim::SimProfile profile;
  std::vector<tracer::RewriteRule> rules;
  net::Endpoint listen{"127.0.0.1", 0};
  // Registered with the broker; defaults to the bound listen address.
  std::optional<std::string> advertise;
  std::set<std::string> tags;
  // session-<id>.jsonl per session. A factory, when set, takes precedence.
  std::optional<std::filesystem::path> trace_dir;
  TraceSinkFactory trace_sinks;
};

// Hosts one virtual SIM: registers it with the broker and serves tunnel
// sessions to probes holding a valid lease, one at a time, relaying every
// APDU through a tracer with the configured rewrite rules.
class ProviderServer {
 public:
  // Binds and registers; throws on broker or socket errors.
  explicit ProviderServer(ProviderConfig config);
  ~ProviderServer();
  ProviderServer(const ProviderServer&) = delete;
  ProviderServer& operator=(const ProviderServer&) = delete;

  net::Endpoint endpoint() const { return listener_.local_endpoint(); }
  unsigned sessions_served() const noexcept { return sessions_served_; }

  // Stops serving and marks the SIM offline at the broker (best effort).
  void stop();

 private:
  void accept_loop();
  void serve(std::unique_ptr<net::TcpStream> stream);
  bool lease_valid(const std::string& lease_token);
  std::shared_ptr<tracer::TraceSink> sink_for(std::uint32_t session);

  ProviderConfig config_;
  vsim::VirtualSim sim_;
  std::mutex sim_mu_;
  net::TcpListener listener_;
  std::atomic<bool> stopping_{false};
  std::atomic<unsigned> sessions_served_{0};
  std::mutex conn_mu_;
  struct Connection {
    std::thread thread;
    std::shared_ptr<std::atomic<bool>> done;
  };
  std::list<Connection> connections_;
  std::thread acceptor_;
};

}  // namespace simlink::agent
