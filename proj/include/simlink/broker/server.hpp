#pragma once

#include <atomic>
#include <chrono>
#include <list>
#include <memory>
#include <mutex>
#include <thread>

#include "simlink/broker/service.hpp"
#include "simlink/net/tcp.hpp"

namespace simlink::broker {

// Newline-delimited JSON control API over TCP. One thread per connection;
// all requests funnel into the service's queue. A background sweep frees
// expired leases every `sweep_interval`.
class BrokerServer {
 public:
  BrokerServer(BrokerService& service, const net::Endpoint& listen,
               std::chrono::milliseconds sweep_interval = std::chrono::seconds(1));
  ~BrokerServer();
  BrokerServer(const BrokerServer&) = delete;
  BrokerServer& operator=(const BrokerServer&) = delete;

  net::Endpoint endpoint() const { return listener_.local_endpoint(); }

  void stop();

 private:
  void accept_loop();
  void sweep_loop();
  void serve(std::unique_ptr<net::TcpStream> stream);

  BrokerService& service_;
  net::TcpListener listener_;
  std::chrono::milliseconds sweep_interval_;
  std::atomic<bool> stopping_{false};
  std::mutex mu_;
  struct Connection {
    std::thread thread;
    std::shared_ptr<std::atomic<bool>> done;
  };
  std::list<Connection> connections_;
  std::thread acceptor_;
  std::thread sweeper_;
};

}  // namespace simlink::broker
