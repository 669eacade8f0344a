#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tollopt/config.hpp"
#include "tollopt/demand.hpp"
#include "tollopt/guidance.hpp"
#include "tollopt/metrics.hpp"
#include "tollopt/network.hpp"
#include "tollopt/optimizer.hpp"
#include "tollopt/route_choice.hpp"
#include "tollopt/supply.hpp"
#include "tollopt/toll_schedule.hpp"

namespace tollopt {

/// Everything loaded once per config and shared read-only by all runs.
struct ScenarioInputs {
  Network network;
  ODDemand historical;
  PathCatalog paths;
  /// Historical link times on the Δ grid over the simulation period. They
  /// seed the disseminated guidance and are what uninformed drivers expect.
  GuidanceTable historical_times;
};

/// Loads network, demand and paths. Missing files raise ConfigError. Without
/// a historical-times file the times are derived by a consistent prediction
/// of the whole period under historical demand and no tolls.
ScenarioInputs load_inputs(const Config& config);

GuidanceTable derive_historical_times(const Network& network, const PathCatalog& paths,
                                      const ODDemand& demand, const Config& config);

SupplyContext make_context(const ScenarioInputs& inputs, const Config& config);

/// Base for vehicle ids created by the predictor.
inline constexpr VehicleId kPredictorIdBase = VehicleId{1} << 40;
/// Base for phantom vehicles inserted by noisy state estimation.
inline constexpr VehicleId kPhantomIdBase = VehicleId{1} << 50;

/// Copy of the world state. With count_noise_sd > 0 each link's occupancy n
/// is perturbed by round(n * sd * z): vehicles at the back of the queue are
/// dropped, or copied under fresh ids (while storage allows).
NetworkState estimate_state(const NetworkState& world, const Network& network, double count_noise_sd,
                            std::uint64_t seed);

struct CycleRecord {
  std::size_t cycle = 0;
  double start = 0.0;
  std::vector<double> lambda;       // tolls charged during [start, start + Δ)
  std::vector<double> next_lambda;  // tolls announced for the next interval
  bool optimized = false;
  bool aborted = false;
  std::string note;
  GuidanceTable guidance;  // guidance disseminated at the end of the cycle
  std::vector<TraceRow> trace;
  std::optional<double> best_objective;
  std::size_t evaluations = 0;
  std::size_t converged_evaluations = 0;
  double wall_clock = 0.0;
};

struct ReplicationResult {
  std::size_t replication = 0;
  /// Every world trip generated, by vehicle id; stranded trips have no travel time.
  std::vector<TripRecord> trips;
  std::vector<CycleRecord> cycles;
  GuidanceTable world_guidance;
  std::size_t stranded = 0;
  bool complete = true;
  std::string error;
};

/// Per departure interval statistics pooled across replications.
struct SeriesRow {
  double start = 0.0;
  double end = 0.0;
  std::string phase;  // warmup, tolling or post
  SummaryStats stats;
};

struct ScenarioRun {
  Scenario scenario = Scenario::NoToll;
  double level = 1.0;
  std::vector<ReplicationResult> replications;
  std::vector<SeriesRow> series;
  std::vector<double> static_tolls;
};

using CycleObserver = std::function<void(const CycleRecord&)>;

using StaticEvaluator = std::function<Evaluation(const std::vector<double>& tolls)>;

/// Total travel time over the full simulation period when `tolls` are charged
/// throughout the tolling window, under historical demand scaled by the
/// static demand factor. Keeps a reference to `inputs`.
StaticEvaluator static_evaluator(const ScenarioInputs& inputs, const Config& config);

/// Static toll vector minimizing the static evaluator.
OptimizationResult compute_static_tolls(const ScenarioInputs& inputs, const Config& config);

/// One closed-loop replication: perturbed world demand, Δ-length cycles of
/// estimate, predict/optimize, advance the world and disseminate, then a drain
/// with no new departures.
ReplicationResult run_replication(const ScenarioInputs& inputs, const Config& config, Scenario scenario,
                                  double level, std::size_t replication,
                                  const std::vector<double>& static_tolls,
                                  const CycleObserver& observer = {});

ScenarioRun run_scenario(const ScenarioInputs& inputs, const Config& config, Scenario scenario,
                         double level, const std::vector<double>& static_tolls,
                         const CycleObserver& observer = {});

/// Departure-interval series over the whole period on the Δ grid.
std::vector<SeriesRow> departure_series(const std::vector<ReplicationResult>& replications,
                                        const Config& config);

/// Travel times of completed trips departing inside `window`, all replications.
std::vector<double> travel_times_in(const ScenarioRun& run, TimeWindow window);

}  // namespace tollopt
