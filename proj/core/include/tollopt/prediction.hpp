#pragma once

#include <cstdint>
#include <span>

#include "tollopt/demand.hpp"
#include "tollopt/guidance.hpp"
#include "tollopt/supply.hpp"
#include "tollopt/toll_schedule.hpp"

namespace tollopt {

struct ConsistencyReport {
  std::size_t iterations = 0;
  double gap = 0.0;  // max relative guidance/prediction deviation
  bool converged = false;
};

struct ConsistencySettings {
  double eps = 0.05;
  std::size_t max_iter = 5;
  /// Floor on the denominator of the relative gap, seconds.
  double gap_floor = 60.0;
};

struct Prediction {
  GuidanceTable guidance;   // guidance the final simulation ran under
  SimulationResult result;  // that simulation
  ConsistencyReport report;
};

/// Guidance-consistent state prediction over [clock, initial.end()).
/// Simulates a clone of `estimated` under the current guidance, averages the
/// predicted link times into the guidance by MSA, and repeats until the gap
/// drops to eps or max_iter simulations have run. Non-convergence is
/// reported, not thrown. `initial` must start at the estimated state's clock.
Prediction predict_consistent(const NetworkState& estimated, std::span<const TripRecord> trips,
                              const TollSchedule& tolls, const GuidanceTable& initial,
                              const ConsistencySettings& settings, std::uint64_t seed,
                              const SupplyContext& context);

/// g + (predicted - g) / (n + 1), element-wise, floored at free-flow times.
GuidanceTable msa_update(const GuidanceTable& guidance, const GuidanceTable& predicted,
                         std::size_t n, const Network& network);

/// max over cells with traffic of |g - p| / max(p, floor); zero when no cell
/// carries traffic.
double consistency_gap(const GuidanceTable& guidance, const SimulationResult& result,
                       double floor = 60.0);

/// Total travel time: experienced times of completed trips plus time accrued
/// by vehicles still in the network at the horizon.
double objective(const SimulationResult& result);

}  // namespace tollopt
