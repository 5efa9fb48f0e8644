#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace simlink::broker {

using TimeMs = std::int64_t;

inline constexpr TimeMs kDefaultLeaseMs = 15 * 60 * 1000;
inline constexpr TimeMs kHeartbeatExpiryMs = 60 * 1000;

enum class BrokerErrc {
  InvalidIccid,
  NoMatch,
  ProbeStale,
  AlreadyLeased,
  UnknownLease,
  UnknownProbe,
  InvalidArgument,
  Unauthorized,
  Unavailable,
};

std::string_view to_string(BrokerErrc code) noexcept;
std::optional<BrokerErrc> errc_from_string(std::string_view name) noexcept;

class BrokerError : public std::runtime_error {
 public:
  BrokerError(BrokerErrc code, const std::string& detail);
  BrokerErrc code() const noexcept { return code_; }

 private:
  BrokerErrc code_;
};

enum class SimStatus { Free, Leased, Offline };
std::string_view to_string(SimStatus status) noexcept;

struct SimRecord {
  std::string iccid;
  std::set<std::string> tags;
  std::string provider_endpoint;
  SimStatus status = SimStatus::Free;
  std::optional<std::string> lease_id;  // set iff Leased
  TimeMs registered_at = 0;
  std::uint64_t last_lease_seq = 0;  // 0: never leased

  bool operator==(const SimRecord&) const = default;
};

struct ProbeRecord {
  std::string probe_id;
  std::string location_tag;
  TimeMs last_heartbeat = 0;

  bool operator==(const ProbeRecord&) const = default;
};

struct Lease {
  std::string lease_id;
  std::string iccid;
  std::string probe_id;
  TimeMs granted_at = 0;
  TimeMs expires_at = 0;
  std::string token;

  bool operator==(const Lease&) const = default;
};

// Exact ICCID, or every tag in `tags` present on the SIM.
struct LeaseCriteria {
  std::optional<std::string> iccid;
  std::set<std::string> tags;

  static LeaseCriteria exact(std::string iccid) { return {std::move(iccid), {}}; }
  static LeaseCriteria tagged(std::set<std::string> tags) { return {std::nullopt, std::move(tags)}; }
};

struct RegistryState {
  std::map<std::string, SimRecord> sims;
  std::map<std::string, ProbeRecord> probes;
  std::map<std::string, Lease> active;  // by lease id
  std::set<std::string> issued;         // every lease id ever granted
  std::uint64_t lease_counter = 0;

  bool operator==(const RegistryState&) const = default;
};

nlohmann::json to_json(const SimRecord& sim);
nlohmann::json to_json(const ProbeRecord& probe);
nlohmann::json to_json(const Lease& lease);

// Lease registry as an event-sourced state machine. Every mutation is one
// or more events passed through apply(); the journal callback sees each
// event after it took effect, so a log of them replays to the same state.
class Registry {
 public:
  using Journal = std::function<void(const nlohmann::json& event)>;

  explicit Registry(std::uint64_t token_seed = std::random_device{}());

  void set_journal(Journal journal) { journal_ = std::move(journal); }

  // Idempotent upserts. A re-registered Offline SIM comes back Free; a
  // leased one keeps its lease.
  void register_sim(const std::string& iccid, const std::set<std::string>& tags,
                    const std::string& provider_endpoint, TimeMs now);
  void register_probe(const std::string& probe_id, const std::string& location_tag,
                      TimeMs now);
  void heartbeat(const std::string& probe_id, TimeMs now);

  Lease request_lease(const std::string& probe_id, const LeaseCriteria& criteria,
                      TimeMs duration_ms, TimeMs now);

  // Idempotent for issued ids; UnknownLease otherwise.
  void release(const std::string& lease_id, TimeMs now);

  // Frees every lease with expires_at <= now. Returns the freed ICCIDs.
  std::vector<std::string> expire_sweep(TimeMs now);

  // Ends any lease on the SIM and marks it Offline.
  void sim_offline(const std::string& iccid, TimeMs now);

  // The active, unexpired lease on `iccid` carrying `token`, if any.
  std::optional<Lease> validate_lease(const std::string& token, const std::string& iccid,
                                      TimeMs now) const;

  const RegistryState& state() const noexcept { return state_; }
  const SimRecord* find_sim(const std::string& iccid) const;

  // Applies one journaled event. Throws std::invalid_argument on events
  // that do not fit the current state.
  void apply(const nlohmann::json& event);

  static Registry replay(const std::vector<nlohmann::json>& events);

 private:
  void commit(const nlohmann::json& event);
  std::string new_token();

  RegistryState state_;
  std::mt19937_64 rng_;
  Journal journal_;
};

}  // namespace simlink::broker
