#include "simlink/lab/sweep.hpp"

#include <algorithm>
#include <stdexcept>

#include <fmt/format.h>

#include "simlink/vsim/virtual_sim.hpp"

namespace simlink::lab {

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of nothing");
  std::sort(values.begin(), values.end());
  const auto n = values.size();
  return n % 2 == 1 ? values[n / 2] : (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

std::string format_decimal(double value) {
  auto s = fmt::format("{:.6f}", value);
  while (s.back() == '0' && s[s.size() - 2] != '.') s.pop_back();
  return s;
}

std::vector<SweepRow> lab_sweep(const SweepConfig& config) {
  if (config.rtt_grid.empty()) throw std::invalid_argument("empty rtt grid");
  if (config.repetitions == 0) throw std::invalid_argument("repetitions must be positive");

  std::vector<SweepRow> rows;
  for (std::size_t gi = 0; gi < config.rtt_grid.size(); ++gi) {
    const auto rtt = config.rtt_grid[gi];
    unsigned successes = 0;
    std::vector<double> elapsed;
    for (unsigned rep = 0; rep < config.repetitions; ++rep) {
      vsim::VirtualSim sim(config.profile);
      DelayedLink link(sim, DelayModel{rtt, config.jitter_ms, config.seed + 7919 * gi + rep});

      auto modem = config.modem;
      modem.k = config.profile.k;
      modem.op_salt = config.profile.op_salt;
      modem.last_sqn = config.profile.sqn;
      modem.stall = config.stall;
      modem.rand_seed = config.seed + rep;

      const auto report = run_session(modem, link);
      if (report.ok()) ++successes;
      elapsed.push_back(static_cast<double>(report.elapsed_ms));
    }
    rows.push_back({rtt, config.stall.enabled,
                    static_cast<double>(successes) / config.repetitions, median(elapsed)});
  }
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = "rtt_ms,stall,success_rate,median_elapsed_ms\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{}\n", r.rtt_ms, r.stall ? "on" : "off",
                       format_decimal(r.success_rate), format_decimal(r.median_elapsed_ms));
  }
  return out;
}

std::string sweep_table(const std::vector<SweepRow>& rows) {
  std::string out = fmt::format("{:>8}  {:>5}  {:>12}  {:>17}\n", "rtt_ms", "stall",
                                "success_rate", "median_elapsed_ms");
  for (const auto& r : rows) {
    out += fmt::format("{:>8}  {:>5}  {:>12}  {:>17}\n", r.rtt_ms, r.stall ? "on" : "off",
                       format_decimal(r.success_rate), format_decimal(r.median_elapsed_ms));
  }
  return out;
}

}  // namespace simlink::lab
