#pragma once

#include <chrono>
#include <memory>
#include <set>
#include <string>

#include "json.hpp"
#include "simlink/broker/registry.hpp"
#include "simlink/net/tcp.hpp"

namespace simlink::broker {

struct GrantedLease {
  Lease lease;
  std::string provider_endpoint;
};

// Blocking client for the control API. Error replies are thrown as
// BrokerError with the reply's code; transport trouble as
// net::TransportError.
class BrokerClient {
 public:
  static constexpr std::chrono::milliseconds kDefaultTimeout{5000};

  BrokerClient(const net::Endpoint& broker, std::string token,
               std::chrono::milliseconds timeout = kDefaultTimeout);

  // Raw exchange; returns the reply whatever its "ok".
  nlohmann::json call(const std::string& op, const nlohmann::json& body = nlohmann::json::object());

  void register_sim(const std::string& iccid, const std::set<std::string>& tags,
                    const std::string& endpoint);
  void register_probe(const std::string& probe_id, const std::string& location_tag);
  void heartbeat(const std::string& probe_id);
  GrantedLease request_lease(const std::string& probe_id, const LeaseCriteria& criteria,
                             TimeMs duration_ms = kDefaultLeaseMs);
  void release(const std::string& lease_id);
  bool validate_lease(const std::string& lease_token, const std::string& iccid);
  void sim_offline(const std::string& iccid);

 private:
  nlohmann::json checked(const std::string& op, const nlohmann::json& body);

  std::unique_ptr<net::TcpStream> stream_;
  std::unique_ptr<net::LineReader> reader_;
  std::string token_;
  std::chrono::milliseconds timeout_;
};

Lease lease_from_json(const nlohmann::json& j);

}  // namespace simlink::broker
