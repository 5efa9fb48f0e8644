#include "simlink/agent/probe.hpp"

#include <chrono>
#include <random>

#include <spdlog/spdlog.h>

#include "simlink/lab/link.hpp"
#include "simlink/tunnel/peer.hpp"

namespace simlink::agent {

using nlohmann::json;
using SteadyClock = std::chrono::steady_clock;

namespace {

std::int64_t ms_between(SteadyClock::time_point from, SteadyClock::time_point to) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(to - from).count();
}

std::uint32_t fresh_session_id() {
  std::random_device rd;
  std::uniform_int_distribution<std::uint32_t> dist(1, 0xFFFFFFFFu);
  return dist(rd);
}

}  // namespace

json to_json(const ProbeOutcome& o) {
  json j{{"lease",
          {{"lease_id", o.lease.lease.lease_id},
           {"iccid", o.lease.lease.iccid},
           {"provider_endpoint", o.lease.provider_endpoint}}},
         {"session_id", o.session_id},
         {"report", lab::to_json(o.report)},
         {"timings_ms", {{"lease", o.lease_ms}, {"established", o.established_ms}}}};
  if (o.first_response_ms) j["timings_ms"]["first_response"] = *o.first_response_ms;
  return j;
}

ProbeOutcome run_probe(const ProbeConfig& config) {
  broker::BrokerClient client(config.broker, config.token);
  client.register_probe(config.probe_id, config.location_tag);

  ProbeOutcome outcome;
  const auto start = SteadyClock::now();
  outcome.lease = client.request_lease(config.probe_id, config.criteria, config.lease_ms);
  outcome.lease_ms = ms_between(start, SteadyClock::now());
  const auto& lease = outcome.lease.lease;
  spdlog::info("leased {} as {}", lease.iccid, lease.lease_id);

  try {
    auto stream = net::TcpStream::connect(net::Endpoint::parse(outcome.lease.provider_endpoint),
                                          std::chrono::seconds(5));
    outcome.session_id = fresh_session_id();
    tunnel::ProbeTunnel tunnel(std::move(stream), outcome.session_id);
    tunnel.handshake(lease.token);
    outcome.established_ms = ms_between(start, SteadyClock::now());

    auto sink = config.trace_sink;
    if (!sink && config.trace_out) sink = std::make_shared<tracer::JsonlFileSink>(*config.trace_out);
    tracer::Tracer trace(outcome.session_id, sink);
    lab::TunnelCardLink link(tunnel);
    outcome.report = lab::run_session(config.modem, link, &trace);
    if (auto t = link.first_response_at()) outcome.first_response_ms = ms_between(start, *t);
    tunnel.close();
    trace.close();
  } catch (...) {
    if (config.release_lease) {
      try {
        client.release(lease.lease_id);
      } catch (const std::exception& e) {
        spdlog::warn("could not release {}: {}", lease.lease_id, e.what());
      }
    }
    throw;
  }
  if (config.release_lease) client.release(lease.lease_id);
  return outcome;
}

}  // namespace simlink::agent
