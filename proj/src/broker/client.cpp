#include "simlink/broker/client.hpp"

#include <fmt/format.h>

namespace simlink::broker {

using nlohmann::json;

Lease lease_from_json(const json& j) {
  return Lease{j.at("lease_id").get<std::string>(), j.at("iccid").get<std::string>(),
               j.at("probe_id").get<std::string>(), j.at("granted_at").get<TimeMs>(),
               j.at("expires_at").get<TimeMs>(),    j.at("token").get<std::string>()};
}

BrokerClient::BrokerClient(const net::Endpoint& broker, std::string token,
                           std::chrono::milliseconds timeout)
    : stream_(net::TcpStream::connect(broker, timeout)),
      reader_(std::make_unique<net::LineReader>(*stream_)),
      token_(std::move(token)),
      timeout_(timeout) {}

json BrokerClient::call(const std::string& op, const json& body) {
  const auto text = json{{"op", op}, {"token", token_}, {"body", body}}.dump() + "\n";
  stream_->write_all(ByteView(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  auto line = reader_->next(timeout_);
  if (!line) throw net::TransportError("broker closed the connection");
  auto reply = json::parse(*line, nullptr, false);
  if (reply.is_discarded() || !reply.is_object()) {
    throw net::TransportError("malformed reply from broker");
  }
  return reply;
}

json BrokerClient::checked(const std::string& op, const json& body) {
  auto reply = call(op, body);
  if (reply.value("ok", false)) return reply;
  const auto name = reply.value("error", std::string{});
  const auto code = errc_from_string(name);
  if (!code) throw net::TransportError(fmt::format("broker error '{}'", name));
  auto detail = reply.value("detail", std::string{});
  // The server's detail already leads with the code name.
  if (detail.rfind(name, 0) == 0) detail = detail.substr(std::min(detail.size(), name.size() + 2));
  throw BrokerError(*code, detail);
}

void BrokerClient::register_sim(const std::string& iccid, const std::set<std::string>& tags,
                                const std::string& endpoint) {
  checked("register_sim", {{"iccid", iccid}, {"tags", tags}, {"endpoint", endpoint}});
}

void BrokerClient::register_probe(const std::string& probe_id, const std::string& location_tag) {
  checked("register_probe", {{"probe_id", probe_id}, {"location_tag", location_tag}});
}

void BrokerClient::heartbeat(const std::string& probe_id) {
  checked("heartbeat", {{"probe_id", probe_id}});
}

GrantedLease BrokerClient::request_lease(const std::string& probe_id,
                                         const LeaseCriteria& criteria, TimeMs duration_ms) {
  json body{{"probe_id", probe_id}, {"duration_ms", duration_ms}};
  if (criteria.iccid) {
    body["iccid"] = *criteria.iccid;
  } else {
    body["tags"] = criteria.tags;
  }
  auto reply = checked("request_lease", body);
  const auto& j = reply.at("lease");
  return {lease_from_json(j), j.at("provider_endpoint").get<std::string>()};
}

void BrokerClient::release(const std::string& lease_id) {
  checked("release", {{"lease_id", lease_id}});
}

bool BrokerClient::validate_lease(const std::string& lease_token, const std::string& iccid) {
  return checked("validate_lease", {{"lease_token", lease_token}, {"iccid", iccid}})
      .value("valid", false);
}

void BrokerClient::sim_offline(const std::string& iccid) {
  checked("sim_offline", {{"iccid", iccid}});
}

}  // namespace simlink::broker
