#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "simlink/lab/modem.hpp"
#include "simlink/vsim/profile.hpp"

namespace simlink::lab {

struct SweepConfig {
  std::vector<std::int64_t> rtt_grid;
  StallPolicy stall;
  unsigned repetitions = 1;
  std::uint64_t seed = 1;
  std::int64_t jitter_ms = 0;
  vsim::SimProfile profile = vsim::demo_profile();
  // Template; k, op_salt and last_sqn come from the profile.
  ModemConfig modem;
};

struct SweepRow {
  std::int64_t rtt_ms = 0;
  bool stall = false;
  double success_rate = 0.0;
  double median_elapsed_ms = 0.0;

  bool operator==(const SweepRow&) const = default;
};

// One row per grid entry, in grid order. Each run uses a fresh card.
// Throws std::invalid_argument on an empty grid or zero repetitions.
std::vector<SweepRow> lab_sweep(const SweepConfig& config);

// Median; the mean of the two middle values for even sizes.
double median(std::vector<double> values);

// "1.0", "0.25": at least one decimal, no trailing zeros beyond it.
std::string format_decimal(double value);

// Header rtt_ms,stall,success_rate,median_elapsed_ms.
std::string sweep_csv(const std::vector<SweepRow>& rows);
std::string sweep_table(const std::vector<SweepRow>& rows);

}  // namespace simlink::lab
