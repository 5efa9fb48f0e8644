#include "simlink/broker/registry.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "simlink/vsim/identity.hpp"

namespace simlink::broker {

using nlohmann::json;

namespace {

constexpr std::string_view kErrcNames[] = {
    "InvalidIccid",  "NoMatch",         "ProbeStale",   "AlreadyLeased", "UnknownLease",
    "UnknownProbe",  "InvalidArgument", "Unauthorized", "Unavailable",
};

bool iccid_well_formed(const std::string& iccid) {
  return (iccid.size() == 19 || iccid.size() == 20) && vsim::is_decimal(iccid) &&
         vsim::luhn_valid(iccid);
}

[[noreturn]] void bad_event(const json& event, std::string_view why) {
  throw std::invalid_argument(fmt::format("event {} does not apply: {}", event.dump(), why));
}

}  // namespace

std::string_view to_string(BrokerErrc code) noexcept {
  return kErrcNames[static_cast<std::size_t>(code)];
}

std::optional<BrokerErrc> errc_from_string(std::string_view name) noexcept {
  for (std::size_t i = 0; i < std::size(kErrcNames); ++i) {
    if (kErrcNames[i] == name) return static_cast<BrokerErrc>(i);
  }
  return std::nullopt;
}

BrokerError::BrokerError(BrokerErrc code, const std::string& detail)
    : std::runtime_error(detail.empty() ? std::string(to_string(code))
                                        : fmt::format("{}: {}", to_string(code), detail)),
      code_(code) {}

std::string_view to_string(SimStatus status) noexcept {
  switch (status) {
    case SimStatus::Free:
      return "Free";
    case SimStatus::Leased:
      return "Leased";
    case SimStatus::Offline:
      return "Offline";
  }
  return "Unknown";
}

json to_json(const SimRecord& sim) {
  json j{{"iccid", sim.iccid},
         {"tags", sim.tags},
         {"provider_endpoint", sim.provider_endpoint},
         {"status", to_string(sim.status)},
         {"registered_at", sim.registered_at}};
  if (sim.lease_id) j["lease_id"] = *sim.lease_id;
  return j;
}

json to_json(const ProbeRecord& probe) {
  return {{"probe_id", probe.probe_id},
          {"location_tag", probe.location_tag},
          {"last_heartbeat", probe.last_heartbeat}};
}

json to_json(const Lease& lease) {
  return {{"lease_id", lease.lease_id},   {"iccid", lease.iccid},
          {"probe_id", lease.probe_id},   {"granted_at", lease.granted_at},
          {"expires_at", lease.expires_at}, {"token", lease.token}};
}

Registry::Registry(std::uint64_t token_seed) : rng_(token_seed) {}

void Registry::commit(const json& event) {
  apply(event);
  if (journal_) journal_(event);
}

std::string Registry::new_token() {
  return fmt::format("{:016x}{:016x}", rng_(), rng_());
}

const SimRecord* Registry::find_sim(const std::string& iccid) const {
  auto it = state_.sims.find(iccid);
  return it == state_.sims.end() ? nullptr : &it->second;
}

void Registry::register_sim(const std::string& iccid, const std::set<std::string>& tags,
                            const std::string& provider_endpoint, TimeMs now) {
  if (!iccid_well_formed(iccid)) {
    throw BrokerError(BrokerErrc::InvalidIccid, iccid);
  }
  commit({{"ev", "register_sim"},
          {"iccid", iccid},
          {"tags", tags},
          {"endpoint", provider_endpoint},
          {"at", now}});
}

void Registry::register_probe(const std::string& probe_id, const std::string& location_tag,
                              TimeMs now) {
  if (probe_id.empty()) throw BrokerError(BrokerErrc::InvalidArgument, "empty probe_id");
  commit({{"ev", "register_probe"}, {"probe_id", probe_id}, {"location", location_tag}, {"at", now}});
}

void Registry::heartbeat(const std::string& probe_id, TimeMs now) {
  if (!state_.probes.count(probe_id)) throw BrokerError(BrokerErrc::UnknownProbe, probe_id);
  commit({{"ev", "heartbeat"}, {"probe_id", probe_id}, {"at", now}});
}

Lease Registry::request_lease(const std::string& probe_id, const LeaseCriteria& criteria,
                              TimeMs duration_ms, TimeMs now) {
  expire_sweep(now);

  if (duration_ms <= 0) throw BrokerError(BrokerErrc::InvalidArgument, "duration must be positive");
  auto probe = state_.probes.find(probe_id);
  if (probe == state_.probes.end() || now - probe->second.last_heartbeat > kHeartbeatExpiryMs) {
    throw BrokerError(BrokerErrc::ProbeStale, probe_id);
  }

  const SimRecord* chosen = nullptr;
  if (criteria.iccid) {
    if (!iccid_well_formed(*criteria.iccid)) {
      throw BrokerError(BrokerErrc::InvalidIccid, *criteria.iccid);
    }
    const auto* sim = find_sim(*criteria.iccid);
    if (!sim || sim->status == SimStatus::Offline) {
      throw BrokerError(BrokerErrc::NoMatch, *criteria.iccid);
    }
    if (sim->status == SimStatus::Leased) {
      throw BrokerError(BrokerErrc::AlreadyLeased, *criteria.iccid);
    }
    chosen = sim;
  } else {
    for (const auto& [iccid, sim] : state_.sims) {
      if (sim.status != SimStatus::Free) continue;
      if (!std::includes(sim.tags.begin(), sim.tags.end(), criteria.tags.begin(),
                         criteria.tags.end())) {
        continue;
      }
      // Map order is ICCID order, so strict < keeps the lowest ICCID on ties.
      if (!chosen || sim.last_lease_seq < chosen->last_lease_seq) chosen = &sim;
    }
    if (!chosen) throw BrokerError(BrokerErrc::NoMatch, "no free SIM matches the tags");
  }

  const auto seq = state_.lease_counter + 1;
  Lease lease{fmt::format("lease-{:06}", seq), chosen->iccid, probe_id, now, now + duration_ms,
              new_token()};
  commit({{"ev", "lease"},
          {"lease_id", lease.lease_id},
          {"iccid", lease.iccid},
          {"probe_id", lease.probe_id},
          {"granted_at", lease.granted_at},
          {"expires_at", lease.expires_at},
          {"token", lease.token},
          {"seq", seq}});
  return lease;
}

void Registry::release(const std::string& lease_id, TimeMs now) {
  if (!state_.issued.count(lease_id)) throw BrokerError(BrokerErrc::UnknownLease, lease_id);
  if (!state_.active.count(lease_id)) return;
  commit({{"ev", "release"}, {"lease_id", lease_id}, {"at", now}});
}

std::vector<std::string> Registry::expire_sweep(TimeMs now) {
  std::vector<std::string> due;
  for (const auto& [id, lease] : state_.active) {
    if (lease.expires_at <= now) due.push_back(id);
  }
  std::vector<std::string> freed;
  for (const auto& id : due) {
    freed.push_back(state_.active.at(id).iccid);
    commit({{"ev", "expire"}, {"lease_id", id}, {"at", now}});
  }
  std::sort(freed.begin(), freed.end());
  return freed;
}

void Registry::sim_offline(const std::string& iccid, TimeMs now) {
  if (!find_sim(iccid)) throw BrokerError(BrokerErrc::NoMatch, iccid);
  commit({{"ev", "sim_offline"}, {"iccid", iccid}, {"at", now}});
}

std::optional<Lease> Registry::validate_lease(const std::string& token, const std::string& iccid,
                                              TimeMs now) const {
  const auto* sim = find_sim(iccid);
  if (!sim || !sim->lease_id) return std::nullopt;
  const auto& lease = state_.active.at(*sim->lease_id);
  if (lease.token != token || lease.expires_at <= now) return std::nullopt;
  return lease;
}

void Registry::apply(const json& event) {
  const auto kind = event.at("ev").get<std::string>();

  auto end_lease = [&](const std::string& lease_id) {
    auto it = state_.active.find(lease_id);
    if (it == state_.active.end()) bad_event(event, "lease not active");
    auto& sim = state_.sims.at(it->second.iccid);
    sim.status = SimStatus::Free;
    sim.lease_id.reset();
    state_.active.erase(it);
  };

  if (kind == "register_sim") {
    const auto iccid = event.at("iccid").get<std::string>();
    auto& sim = state_.sims[iccid];
    sim.iccid = iccid;
    sim.tags = event.at("tags").get<std::set<std::string>>();
    sim.provider_endpoint = event.at("endpoint").get<std::string>();
    sim.registered_at = event.at("at").get<TimeMs>();
    if (sim.status == SimStatus::Offline) sim.status = SimStatus::Free;
  } else if (kind == "register_probe") {
    const auto id = event.at("probe_id").get<std::string>();
    auto& probe = state_.probes[id];
    probe.probe_id = id;
    probe.location_tag = event.at("location").get<std::string>();
    probe.last_heartbeat = event.at("at").get<TimeMs>();
  } else if (kind == "heartbeat") {
    auto it = state_.probes.find(event.at("probe_id").get<std::string>());
    if (it == state_.probes.end()) bad_event(event, "unknown probe");
    it->second.last_heartbeat = event.at("at").get<TimeMs>();
  } else if (kind == "lease") {
    Lease lease{event.at("lease_id").get<std::string>(),   event.at("iccid").get<std::string>(),
                event.at("probe_id").get<std::string>(),   event.at("granted_at").get<TimeMs>(),
                event.at("expires_at").get<TimeMs>(),      event.at("token").get<std::string>()};
    auto sim = state_.sims.find(lease.iccid);
    if (sim == state_.sims.end() || sim->second.status != SimStatus::Free) {
      bad_event(event, "SIM not free");
    }
    if (lease.expires_at <= lease.granted_at) bad_event(event, "lease ends before it starts");
    const auto seq = event.at("seq").get<std::uint64_t>();
    sim->second.status = SimStatus::Leased;
    sim->second.lease_id = lease.lease_id;
    sim->second.last_lease_seq = seq;
    state_.lease_counter = std::max(state_.lease_counter, seq);
    state_.issued.insert(lease.lease_id);
    state_.active.emplace(lease.lease_id, std::move(lease));
  } else if (kind == "release" || kind == "expire") {
    end_lease(event.at("lease_id").get<std::string>());
  } else if (kind == "sim_offline") {
    auto it = state_.sims.find(event.at("iccid").get<std::string>());
    if (it == state_.sims.end()) bad_event(event, "unknown SIM");
    if (it->second.lease_id) end_lease(*it->second.lease_id);
    it->second.status = SimStatus::Offline;
  } else {
    bad_event(event, "unknown event kind");
  }
}

Registry Registry::replay(const std::vector<json>& events) {
  Registry registry;
  for (const auto& event : events) registry.apply(event);
  return registry;
}

}  // namespace simlink::broker
