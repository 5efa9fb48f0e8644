#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "json.hpp"
#include "simlink/broker/client.hpp"
#include "simlink/lab/modem.hpp"
#include "simlink/net/tcp.hpp"
#include "simlink/tracer/tracer.hpp"

namespace simlink::agent {

struct ProbeConfig {
  net::Endpoint broker;
  std::string token;
  std::string probe_id = "probe-1";
  std::string location_tag;
  broker::LeaseCriteria criteria;
  broker::TimeMs lease_ms = broker::kDefaultLeaseMs;
  lab::ModemConfig modem;
  // Probe-side trace; a sink, when set, takes precedence over the file.
  std::optional<std::filesystem::path> trace_out;
  std::shared_ptr<tracer::TraceSink> trace_sink;
  bool release_lease = true;
};

struct ProbeOutcome {
  broker::GrantedLease lease;
  std::uint32_t session_id = 0;
  lab::SessionReport report;
  // Wall-clock milestones measured from the lease request.
  std::int64_t lease_ms = 0;
  std::int64_t established_ms = 0;
  std::optional<std::int64_t> first_response_ms;
};

nlohmann::json to_json(const ProbeOutcome& outcome);

// Registers the probe, leases a SIM, tunnels to its provider, runs the
// modem script and releases the lease. Broker refusals surface as
// broker::BrokerError, tunnel trouble as tunnel::TunnelError.
ProbeOutcome run_probe(const ProbeConfig& config);

}  // namespace simlink::agent
