#include "simlink/broker/service.hpp"

#include <chrono>

#include <fmt/format.h>

namespace simlink::broker {

using nlohmann::json;

namespace {

json ok(json extra = json::object()) {
  extra["ok"] = true;
  return extra;
}

json fail(BrokerErrc code, const std::string& detail) {
  json j{{"ok", false}, {"error", to_string(code)}};
  if (!detail.empty()) j["detail"] = detail;
  return j;
}

json handle_op(Registry& reg, const std::string& op, const json& body, TimeMs now) {
  if (op == "register_sim") {
    reg.register_sim(body.at("iccid").get<std::string>(),
                     body.value("tags", std::set<std::string>{}),
                     body.at("endpoint").get<std::string>(), now);
    return ok();
  }
  if (op == "register_probe") {
    reg.register_probe(body.at("probe_id").get<std::string>(),
                       body.value("location_tag", std::string{}), now);
    return ok();
  }
  if (op == "heartbeat") {
    reg.heartbeat(body.at("probe_id").get<std::string>(), now);
    return ok();
  }
  if (op == "request_lease") {
    const bool by_iccid = body.contains("iccid");
    const bool by_tags = body.contains("tags");
    if (by_iccid == by_tags) {
      throw BrokerError(BrokerErrc::InvalidArgument, "give exactly one of iccid or tags");
    }
    const auto criteria =
        by_iccid ? LeaseCriteria::exact(body.at("iccid").get<std::string>())
                 : LeaseCriteria::tagged(body.at("tags").get<std::set<std::string>>());
    const auto lease = reg.request_lease(body.at("probe_id").get<std::string>(), criteria,
                                         body.value("duration_ms", kDefaultLeaseMs), now);
    auto j = to_json(lease);
    j["provider_endpoint"] = reg.find_sim(lease.iccid)->provider_endpoint;
    return ok({{"lease", j}});
  }
  if (op == "release") {
    reg.release(body.at("lease_id").get<std::string>(), now);
    return ok();
  }
  if (op == "expire_sweep") {
    return ok({{"freed", reg.expire_sweep(now)}});
  }
  if (op == "sim_offline") {
    reg.sim_offline(body.at("iccid").get<std::string>(), now);
    return ok();
  }
  if (op == "validate_lease") {
    auto lease = reg.validate_lease(body.at("lease_token").get<std::string>(),
                                    body.at("iccid").get<std::string>(), now);
    if (!lease) return ok({{"valid", false}});
    return ok({{"valid", true}, {"lease", to_json(*lease)}});
  }
  if (op == "list_sims") {
    json sims = json::array();
    for (const auto& [_, sim] : reg.state().sims) sims.push_back(to_json(sim));
    return ok({{"sims", sims}});
  }
  if (op == "list_probes") {
    json probes = json::array();
    for (const auto& [_, probe] : reg.state().probes) probes.push_back(to_json(probe));
    return ok({{"probes", probes}});
  }
  if (op == "list_leases") {
    json leases = json::array();
    for (const auto& [_, lease] : reg.state().active) leases.push_back(to_json(lease));
    return ok({{"leases", leases}});
  }
  throw BrokerError(BrokerErrc::InvalidArgument, fmt::format("unknown op '{}'", op));
}

}  // namespace

TimeMs wall_clock_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

json dispatch(Registry& registry, const json& request, TimeMs now,
              const std::string& shared_token) {
  try {
    if (!request.is_object() || !request.contains("op") || !request["op"].is_string()) {
      return fail(BrokerErrc::InvalidArgument, "request needs a string 'op'");
    }
    const auto token = request.value("token", std::string{});
    if (shared_token.empty() || token != shared_token) {
      return fail(BrokerErrc::Unauthorized, "bad or missing token");
    }
    const auto body = request.value("body", json::object());
    if (!body.is_object()) return fail(BrokerErrc::InvalidArgument, "'body' must be an object");
    return handle_op(registry, request["op"].get<std::string>(), body, now);
  } catch (const BrokerError& e) {
    return fail(e.code(), e.what());
  } catch (const json::exception& e) {
    return fail(BrokerErrc::InvalidArgument, e.what());
  }
}

BrokerService::BrokerService(Options options)
    : options_(std::move(options)),
      registry_(options_.token_seed ? *options_.token_seed : std::random_device{}()) {
  if (options_.state_log) {
    for (const auto& event : read_journal(*options_.state_log)) registry_.apply(event);
    journal_ = std::make_unique<JournalWriter>(*options_.state_log);
    registry_.set_journal([this](const json& event) { journal_->append(event); });
    registry_.expire_sweep(options_.clock());
  }
  worker_ = std::thread([this] { worker_loop(); });
}

BrokerService::~BrokerService() {
  {
    std::lock_guard lock(mu_);
    stopping_ = true;
  }
  cv_.notify_all();
  worker_.join();
}

void BrokerService::enqueue(std::function<void()> job) {
  {
    std::lock_guard lock(mu_);
    if (stopping_) throw BrokerError(BrokerErrc::Unavailable, "broker is shutting down");
    queue_.push_back(std::move(job));
  }
  cv_.notify_one();
}

void BrokerService::worker_loop() {
  while (true) {
    std::function<void()> job;
    {
      std::unique_lock lock(mu_);
      cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
      if (queue_.empty()) return;
      job = std::move(queue_.front());
      queue_.pop_front();
    }
    job();
  }
}

json BrokerService::handle(const json& request) {
  try {
    return run([&](Registry& reg, TimeMs now) { return dispatch(reg, request, now, options_.token); });
  } catch (const BrokerError& e) {
    return fail(e.code(), e.what());
  }
}

RegistryState BrokerService::snapshot() {
  return run([](Registry& reg, TimeMs) { return reg.state(); });
}

}  // namespace simlink::broker
