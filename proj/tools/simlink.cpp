// simlink: broker, provider, probe, trace and lab entry points.

#include <atomic>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "simlink/agent/probe.hpp"
#include "simlink/agent/provider.hpp"
#include "simlink/broker/server.hpp"
#include "simlink/broker/service.hpp"
#include "simlink/lab/sweep.hpp"
#include "simlink/tracer/decode.hpp"
#include "simlink/tracer/silent_sms.hpp"
#include "simlink/tunnel/peer.hpp"
#include "simlink/vsim/identity.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace simlink;

namespace {

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

void install_signal_handlers() {
  struct sigaction sa {};
  sa.sa_handler = on_signal;
  sigemptyset(&sa.sa_mask);
  sigaction(SIGINT, &sa, nullptr);
  sigaction(SIGTERM, &sa, nullptr);
}

void wait_for_signal() {
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
}

// Failure reported as one JSON line on stderr.
struct CliFailure {
  int exit_code;
  std::string error;
  std::string detail;
};

[[noreturn]] void config_error(const std::string& detail) { throw CliFailure{2, "ConfigError", detail}; }

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void require_file(const std::string& path, const char* what) {
  if (!fs::is_regular_file(path)) config_error(fmt::format("{} '{}' does not exist", what, path));
}

void require_dir(const std::string& path, const char* what) {
  if (!fs::is_directory(path)) config_error(fmt::format("{} '{}' is not a directory", what, path));
}

net::Endpoint endpoint_arg(const std::string& text, const char* what) {
  try {
    return net::Endpoint::parse(text);
  } catch (const std::exception& e) {
    config_error(fmt::format("{}: {}", what, e.what()));
  }
}

struct Common {
  std::string token;
  std::string log_level = "warn";

  const std::string& require_token() const {
    if (token.empty()) config_error("a token is required (--token or SIMLINK_TOKEN)");
    return token;
  }
};

struct BrokerArgs {
  std::string listen = "127.0.0.1:7700";
  std::string state_log;
  int sweep_ms = 1000;
};

int cmd_broker(const Common& common, const BrokerArgs& args) {
  broker::BrokerService::Options options;
  options.token = common.require_token();
  const auto listen = endpoint_arg(args.listen, "--listen");
  if (!args.state_log.empty()) {
    const auto parent = fs::path(args.state_log).parent_path();
    if (!parent.empty()) require_dir(parent.string(), "--state-log directory");
    options.state_log = args.state_log;
  }
  broker::BrokerService service(std::move(options));
  broker::BrokerServer server(service, listen, std::chrono::milliseconds(args.sweep_ms));
  std::cout << "listening " << server.endpoint().to_string() << std::endl;
  wait_for_signal();
  server.stop();
  return 0;
}

struct ProvideArgs {
  std::string broker;
  std::string profile;
  std::string rules;
  std::string listen = "127.0.0.1:0";
  std::string advertise;
  std::string trace_dir;
  std::string tags;
};

int cmd_provide(const Common& common, const ProvideArgs& args) {
  agent::ProviderConfig cfg;
  cfg.token = common.require_token();
  cfg.broker = endpoint_arg(args.broker, "--broker");
  cfg.listen = endpoint_arg(args.listen, "--listen");
  require_file(args.profile, "--profile");
  try {
    cfg.profile = vsim::load_profile(args.profile);
  } catch (const std::exception& e) {
    config_error(fmt::format("--profile: {}", e.what()));
  }
  if (!args.rules.empty()) {
    require_file(args.rules, "--rules");
    try {
      cfg.rules = tracer::load_rules(args.rules);
    } catch (const std::exception& e) {
      config_error(fmt::format("--rules: {}", e.what()));
    }
  }
  if (!args.trace_dir.empty()) {
    require_dir(args.trace_dir, "--trace-dir");
    cfg.trace_dir = args.trace_dir;
  }
  if (!args.advertise.empty()) cfg.advertise = args.advertise;
  for (auto& t : split_list(args.tags)) cfg.tags.insert(t);

  agent::ProviderServer server(std::move(cfg));
  std::cout << "serving " << server.endpoint().to_string() << std::endl;
  wait_for_signal();
  server.stop();
  return 0;
}

struct ModemArgs {
  std::string script = "full";
  std::int64_t waiting_time = lab::kDefaultWaitingTimeMs;
  std::int64_t null_interval = lab::kDefaultNullIntervalMs;
  std::string stall = "on";
};

lab::ModemConfig modem_from(const ModemArgs& args) {
  lab::ModemConfig modem;
  try {
    modem.script = lab::parse_script(args.script);
  } catch (const std::exception& e) {
    config_error(fmt::format("--script: {}", e.what()));
  }
  if (args.stall != "on" && args.stall != "off") config_error("--stall must be on or off");
  if (args.waiting_time <= 0) config_error("--waiting-time must be positive");
  if (args.null_interval <= 0) config_error("--null-interval must be positive");
  modem.waiting_time_ms = args.waiting_time;
  modem.stall = {args.stall == "on", args.null_interval};
  return modem;
}

struct ProbeArgs {
  std::string broker;
  std::string lease;
  std::string trace_out;
  std::string probe_id = "probe-1";
  std::string location;
  std::string profile;
  std::int64_t lease_ms = broker::kDefaultLeaseMs;
  ModemArgs modem;
};

int cmd_probe(const Common& common, const ProbeArgs& args) {
  agent::ProbeConfig cfg;
  cfg.token = common.require_token();
  cfg.broker = endpoint_arg(args.broker, "--broker");
  cfg.probe_id = args.probe_id;
  cfg.location_tag = args.location;
  cfg.lease_ms = args.lease_ms;
  cfg.modem = modem_from(args.modem);
  if (vsim::is_decimal(args.lease) && (args.lease.size() == 19 || args.lease.size() == 20)) {
    cfg.criteria = broker::LeaseCriteria::exact(args.lease);
  } else {
    const auto tags = split_list(args.lease);
    cfg.criteria = broker::LeaseCriteria::tagged({tags.begin(), tags.end()});
  }
  if (!args.profile.empty()) {
    require_file(args.profile, "--profile");
    try {
      const auto profile = vsim::load_profile(args.profile);
      const auto script = cfg.modem.script;
      const auto waiting = cfg.modem.waiting_time_ms;
      const auto stall = cfg.modem.stall;
      cfg.modem = lab::ModemConfig::for_profile(profile);
      cfg.modem.script = script;
      cfg.modem.waiting_time_ms = waiting;
      cfg.modem.stall = stall;
    } catch (const std::exception& e) {
      config_error(fmt::format("--profile: {}", e.what()));
    }
  } else {
    cfg.modem.verify_aka = false;
  }
  if (!args.trace_out.empty()) {
    const auto parent = fs::path(args.trace_out).parent_path();
    if (!parent.empty()) require_dir(parent.string(), "--trace-out directory");
    cfg.trace_out = args.trace_out;
  }

  const auto outcome = agent::run_probe(cfg);
  std::cout << agent::to_json(outcome).dump() << std::endl;
  if (const auto& f = outcome.report.failure) {
    throw CliFailure{3, std::string(lab::to_string(f->kind)), fmt::format("{}: {}", f->phase, f->detail)};
  }
  return 0;
}

std::vector<tracer::TraceEvent> load_trace(const std::string& file) {
  require_file(file, "trace file");
  try {
    return tracer::read_trace(file);
  } catch (const std::exception& e) {
    throw CliFailure{2, "BadTrace", e.what()};
  }
}

int cmd_trace_decode(const std::string& file) {
  auto events = load_trace(file);
  const auto decoded = tracer::decode_trace(events);
  for (std::size_t i = 0; i < events.size(); ++i) events[i].decoded = decoded[i];
  for (const auto& e : tracer::flag_silent_sms(std::move(events))) {
    std::cout << tracer::to_json(e).dump() << '\n';
  }
  return 0;
}

int cmd_trace_grep(const std::string& file) {
  auto events = load_trace(file);
  const auto decoded = tracer::decode_trace(events);
  for (std::size_t i = 0; i < events.size(); ++i) events[i].decoded = decoded[i];
  for (auto i : tracer::detect_silent_sms(events)) {
    auto e = events[i];
    e.flags.insert(std::string(tracer::kFlagSilentSms));
    std::cout << tracer::to_json(e).dump() << '\n';
  }
  return 0;
}

struct LabArgs {
  std::string rtt_grid = "0,150,300,600,900";
  std::uint64_t seed = 1;
  std::string out;
  unsigned repetitions = 1;
  std::int64_t jitter = 0;
  std::string profile;
  ModemArgs modem;
};

int cmd_lab(const LabArgs& args) {
  lab::SweepConfig cfg;
  for (const auto& item : split_list(args.rtt_grid)) {
    std::size_t used = 0;
    long long v = -1;
    try {
      v = std::stoll(item, &used);
    } catch (const std::exception&) {
    }
    if (used != item.size() || v < 0) config_error(fmt::format("--rtt-grid: bad value '{}'", item));
    cfg.rtt_grid.push_back(v);
  }
  if (cfg.rtt_grid.empty()) config_error("--rtt-grid is empty");
  if (args.repetitions == 0) config_error("--repetitions must be positive");
  if (args.jitter < 0) config_error("--jitter must not be negative");
  cfg.modem = modem_from(args.modem);
  cfg.stall = cfg.modem.stall;
  cfg.seed = args.seed;
  cfg.repetitions = args.repetitions;
  cfg.jitter_ms = args.jitter;
  if (!args.profile.empty()) {
    require_file(args.profile, "--profile");
    try {
      cfg.profile = vsim::load_profile(args.profile);
    } catch (const std::exception& e) {
      config_error(fmt::format("--profile: {}", e.what()));
    }
  }

  const auto rows = lab::lab_sweep(cfg);
  const auto csv = lab::sweep_csv(rows);
  if (args.out.empty()) {
    std::cout << csv;
  } else {
    std::ofstream out(args.out);
    if (!out) config_error(fmt::format("--out: cannot write '{}'", args.out));
    out << csv;
    std::cout << lab::sweep_table(rows);
  }
  return 0;
}

void report_failure(const std::string& error, const std::string& detail) {
  std::cerr << json{{"ok", false}, {"error", error}, {"detail", detail}}.dump() << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SIM tunneling toolkit: broker, provider, probe, trace tools and latency lab"};
  app.require_subcommand(1);

  Common common;
  if (const char* env = std::getenv("SIMLINK_TOKEN")) common.token = env;
  app.add_option("--token", common.token, "Pre-shared token (default: $SIMLINK_TOKEN)");
  app.add_option("--log-level", common.log_level, "trace|debug|info|warn|error|off")
      ->capture_default_str();

  BrokerArgs broker_args;
  auto* broker_cmd = app.add_subcommand("broker", "Run the lease broker");
  broker_cmd->add_option("--listen", broker_args.listen, "host:port to listen on")
      ->capture_default_str();
  broker_cmd->add_option("--state-log", broker_args.state_log, "Append-only JSONL state log");
  broker_cmd->add_option("--sweep-interval-ms", broker_args.sweep_ms, "Lease expiry sweep period")
      ->capture_default_str();

  ProvideArgs provide_args;
  auto* provide_cmd = app.add_subcommand("provide", "Host a virtual SIM");
  provide_cmd->add_option("--broker", provide_args.broker, "Broker host:port")->required();
  provide_cmd->add_option("--profile", provide_args.profile, "SIM profile JSON")->required();
  provide_cmd->add_option("--rules", provide_args.rules, "Rewrite rules JSON");
  provide_cmd->add_option("--listen", provide_args.listen, "Tunnel listen host:port")
      ->capture_default_str();
  provide_cmd->add_option("--advertise", provide_args.advertise,
                          "Endpoint registered with the broker (default: bound address)");
  provide_cmd->add_option("--trace-dir", provide_args.trace_dir, "Directory for session traces");
  provide_cmd->add_option("--tags", provide_args.tags, "Comma-separated SIM tags");

  ProbeArgs probe_args;
  auto* probe_cmd = app.add_subcommand("probe", "Lease a SIM and run a modem session");
  probe_cmd->add_option("--broker", probe_args.broker, "Broker host:port")->required();
  probe_cmd->add_option("--lease", probe_args.lease, "ICCID, or comma-separated tags")->required();
  probe_cmd->add_option("--script", probe_args.modem.script, "Modem script")->capture_default_str();
  probe_cmd->add_option("--trace-out", probe_args.trace_out, "Probe-side trace file");
  probe_cmd->add_option("--probe-id", probe_args.probe_id, "Probe identifier")->capture_default_str();
  probe_cmd->add_option("--location", probe_args.location, "Probe location tag");
  probe_cmd->add_option("--profile", probe_args.profile, "Subscriber profile for AKA checks");
  probe_cmd->add_option("--lease-ms", probe_args.lease_ms, "Lease duration")->capture_default_str();
  probe_cmd->add_option("--waiting-time", probe_args.modem.waiting_time, "T=0 waiting time, ms")
      ->capture_default_str();
  probe_cmd->add_option("--null-interval", probe_args.modem.null_interval, "NULL cadence, ms")
      ->capture_default_str();
  probe_cmd->add_option("--stall", probe_args.modem.stall, "on|off")->capture_default_str();

  std::string trace_file;
  auto* trace_cmd = app.add_subcommand("trace", "Offline trace tools");
  trace_cmd->require_subcommand(1);
  auto* decode_cmd = trace_cmd->add_subcommand("decode", "Re-decode a trace file");
  decode_cmd->add_option("file", trace_file, "Trace JSONL")->required();
  auto* grep_cmd = trace_cmd->add_subcommand("grep-silent-sms", "Print silent SMS events");
  grep_cmd->add_option("file", trace_file, "Trace JSONL")->required();

  LabArgs lab_args;
  auto* lab_cmd = app.add_subcommand("lab", "Latency sweep in simulated time");
  lab_cmd->add_option("--rtt-grid", lab_args.rtt_grid, "Comma-separated RTTs, ms")
      ->capture_default_str();
  lab_cmd->add_option("--stall", lab_args.modem.stall, "on|off")->capture_default_str();
  lab_cmd->add_option("--seed", lab_args.seed, "RNG seed")->capture_default_str();
  lab_cmd->add_option("--out", lab_args.out, "CSV output file (default: stdout)");
  lab_cmd->add_option("--repetitions", lab_args.repetitions, "Runs per grid point")
      ->capture_default_str();
  lab_cmd->add_option("--jitter", lab_args.jitter, "Uniform jitter, +/- ms")->capture_default_str();
  lab_cmd->add_option("--waiting-time", lab_args.modem.waiting_time, "T=0 waiting time, ms")
      ->capture_default_str();
  lab_cmd->add_option("--null-interval", lab_args.modem.null_interval, "NULL cadence, ms")
      ->capture_default_str();
  lab_cmd->add_option("--script", lab_args.modem.script, "Modem script")->capture_default_str();
  lab_cmd->add_option("--profile", lab_args.profile, "SIM profile JSON (default: demo)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_failure("ConfigError", e.what());
    return 2;
  }

  auto logger = spdlog::stderr_color_mt("simlink");
  spdlog::set_default_logger(logger);
  const auto level = spdlog::level::from_str(common.log_level);
  spdlog::set_level(level);
  install_signal_handlers();

  try {
    if (*broker_cmd) return cmd_broker(common, broker_args);
    if (*provide_cmd) return cmd_provide(common, provide_args);
    if (*probe_cmd) return cmd_probe(common, probe_args);
    if (*decode_cmd) return cmd_trace_decode(trace_file);
    if (*grep_cmd) return cmd_trace_grep(trace_file);
    if (*lab_cmd) return cmd_lab(lab_args);
  } catch (const CliFailure& f) {
    report_failure(f.error, f.detail);
    return f.exit_code;
  } catch (const broker::BrokerError& e) {
    report_failure(std::string(broker::to_string(e.code())), e.what());
    return 1;
  } catch (const tunnel::TunnelError& e) {
    report_failure("TunnelError", e.what());
    return 1;
  } catch (const net::TransportError& e) {
    report_failure("TransportError", e.what());
    return 1;
  } catch (const std::exception& e) {
    report_failure("InternalError", e.what());
    return 1;
  }
  return 0;
}
