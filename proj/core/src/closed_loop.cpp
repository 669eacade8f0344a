#include "tollopt/closed_loop.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <memory>
#include <random>

#include <fmt/format.h>

#include "tollopt/prediction.hpp"
#include "tollopt/rng.hpp"

namespace tollopt {
namespace {

// Stream tags mixed into the replication seed. Scenario and demand level are
// deliberately absent so every scenario sees the same random numbers.
enum Stream : std::uint64_t {
  kWorldDemand = 1,
  kWorldTrips,
  kWorldChoice,
  kPredictorTrips,
  kPrediction,
  kGa,
  kEstimation,
  kHistorical,
  kStatic,
};

constexpr double kTimeEps = 1e-9;

void require_file(const std::filesystem::path& p, std::string_view what) {
  if (!std::filesystem::is_regular_file(p))
    throw ConfigError(fmt::format("cannot find {} file {}", what, p.string()));
}

template <class F>
auto loading(const std::filesystem::path& p, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(fmt::format("{}: {}", p.string(), e.what()));
  }
}

std::vector<double> tolls_at(const TollSchedule& schedule, std::size_t gantries, double t) {
  std::vector<double> out(gantries);
  for (std::size_t g = 0; g < gantries; ++g) out[g] = schedule.toll(g, t);
  return out;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

SupplyContext make_context(const ScenarioInputs& inputs, const Config& config) {
  SupplyContext ctx;
  ctx.network = &inputs.network;
  ctx.paths = &inputs.paths;
  ctx.coefficients = config.choice.coefficients;
  ctx.historical = &inputs.historical_times;
  ctx.en_route = config.choice.en_route;
  return ctx;
}

GuidanceTable derive_historical_times(const Network& network, const PathCatalog& paths,
                                      const ODDemand& demand, const Config& config) {
  const auto& t = config.time;
  const std::size_t intervals = t.interval_count();
  const GuidanceTable free = GuidanceTable::free_flow(network, t.start, t.delta, intervals);
  SupplyContext ctx;
  ctx.network = &network;
  ctx.paths = &paths;
  ctx.coefficients = config.choice.coefficients;
  ctx.historical = &free;
  ctx.en_route = config.choice.en_route;

  const auto trips = generate_trips(demand, config.scenario.informed_fraction,
                                    derive_seed(config.scenario.seed, kHistorical));
  const auto tolls = TollSchedule::zeros(network.gantry_count(), t.start, t.delta, 1);
  ConsistencySettings settings = config.prediction;
  settings.max_iter = std::max<std::size_t>(settings.max_iter, 20);
  const NetworkState empty(network, t.start);
  auto p = predict_consistent(empty, trips, tolls, free, settings,
                              derive_seed(config.scenario.seed, kHistorical, 1), ctx);
  return std::move(p.guidance);
}

ScenarioInputs load_inputs(const Config& config) {
  const auto& f = config.files;
  require_file(f.network, "network");
  require_file(f.demand, "demand");
  ScenarioInputs in;
  in.network = loading(f.network, [&] { return load_network(f.network); });
  const auto& t = config.time;
  const auto demand_intervals =
      static_cast<std::size_t>(std::llround((t.end - t.start) / t.demand_interval));
  in.historical =
      loading(f.demand, [&] { return load_demand(f.demand, t.start, t.demand_interval, demand_intervals); });
  if (in.historical.end() > t.end + kTimeEps)
    throw ConfigError(fmt::format("{}: demand extends past the end of the simulation period",
                                  f.demand.string()));
  for (const auto& od : in.historical.pairs()) {
    if (!in.network.has_node(od.origin) || !in.network.has_node(od.destination))
      throw ConfigError(fmt::format("{}: OD pair {}->{} references an unknown node", f.demand.string(),
                                    od.origin, od.destination));
  }
  if (f.paths) {
    require_file(*f.paths, "paths");
    in.paths = loading(*f.paths, [&] { return PathCatalog::load(*f.paths, in.network); });
    for (const auto& od : in.historical.pairs())
      if (!in.paths.contains(od))
        throw ConfigError(fmt::format("{}: no paths for OD pair {}->{}", f.paths->string(), od.origin,
                                      od.destination));
  } else {
    in.paths = loading(f.network,
                       [&] { return PathCatalog::enumerate(in.network, in.historical.pairs(), config.choice.k_max); });
  }
  if (f.historical_times) {
    require_file(*f.historical_times, "historical times");
    in.historical_times = loading(*f.historical_times, [&] {
      return load_guidance(*f.historical_times, in.network, t.start, t.delta, t.interval_count());
    });
  } else {
    in.historical_times = derive_historical_times(in.network, in.paths, in.historical, config);
  }
  return in;
}

NetworkState estimate_state(const NetworkState& world, const Network& network, double count_noise_sd,
                            std::uint64_t seed) {
  NetworkState est = clone_state(world);
  if (count_noise_sd <= 0.0) return est;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  VehicleId next = kPhantomIdBase;
  for (const auto& [id, v] : world.vehicles()) next = std::max(next, id + 1);
  for (LinkIndex l = 0; l < network.link_count(); ++l) {
    const double z = normal(rng);
    const auto n = static_cast<double>(world.link_queue(l).size());
    if (n == 0.0) continue;
    const auto k = static_cast<long long>(std::llround(n * count_noise_sd * z));
    for (long long i = 0; i < -k; ++i)
      if (!est.drop_last_on_link(l)) break;
    for (long long i = 0; i < k; ++i)
      if (!est.duplicate_last_on_link(l, next++, network.link(l).storage)) break;
  }
  return est;
}

StaticEvaluator static_evaluator(const ScenarioInputs& inputs, const Config& config) {
  const auto& t = config.time;
  const auto demand = inputs.historical.scaled(config.scenario.static_demand_factor);
  auto trips = std::make_shared<const std::vector<TripRecord>>(generate_trips(
      demand, config.scenario.informed_fraction, derive_seed(config.scenario.seed, kStatic)));
  const std::uint64_t seed = derive_seed(config.scenario.seed, kStatic, 1);
  return [&inputs, ctx = make_context(inputs, config), trips, seed, t, settings = config.prediction](
             const std::vector<double>& tolls) {
    TollSchedule schedule = TollSchedule::constant(tolls, t.start, t.delta, 1);
    schedule.set_active_window(t.tolling());
    const NetworkState empty(inputs.network, t.start);
    auto p = predict_consistent(empty, *trips, schedule, inputs.historical_times, settings, seed, ctx);
    return Evaluation{objective(p.result), std::move(p.guidance), p.report};
  };
}

OptimizationResult compute_static_tolls(const ScenarioInputs& inputs, const Config& config) {
  GAParams params = config.ga;
  params.seed = derive_seed(config.scenario.seed, kStatic, 2);
  const std::size_t m = inputs.network.gantry_count();
  return optimize_static(TollBounds::uniform(m, config.tolls.lower, config.tolls.upper), params,
                         static_evaluator(inputs, config));
}

ReplicationResult run_replication(const ScenarioInputs& inputs, const Config& config, Scenario scenario,
                                  double level, std::size_t replication,
                                  const std::vector<double>& static_tolls, const CycleObserver& observer) {
  const auto& t = config.time;
  const auto& net = inputs.network;
  const std::size_t m = net.gantry_count();
  const std::uint64_t seed = derive_seed(config.scenario.seed, replication);
  const SupplyContext ctx = make_context(inputs, config);

  ReplicationResult out;
  out.replication = replication;

  // The predictor knows the demand level but not the perturbation.
  const ODDemand predictor_demand = inputs.historical.scaled(level);
  const ODDemand world_demand = perturb(predictor_demand, config.scenario.cov, derive_seed(seed, kWorldDemand));
  const auto world_trips =
      generate_trips(world_demand, config.scenario.informed_fraction, derive_seed(seed, kWorldTrips));
  const std::uint64_t world_seed = derive_seed(seed, kWorldChoice);

  TollSchedule announced;
  if (scenario == Scenario::Static) {
    if (static_tolls.size() != m)
      throw std::invalid_argument(
          fmt::format("static scenario needs {} tolls, got {}", m, static_tolls.size()));
    announced = TollSchedule::constant(static_tolls, t.start, t.delta, 1);
  } else {
    announced = TollSchedule::zeros(m, t.start, t.delta, 1);
  }
  announced.set_active_window(t.tolling());

  NetworkState world(net, t.start);
  // Travelers see the latest prediction, its last interval held beyond the
  // horizon. The full-period log only records what was disseminated.
  GuidanceTable world_guidance = inputs.historical_times;
  GuidanceTable guidance_log = inputs.historical_times;
  std::map<VehicleId, TripRecord> finished;
  auto absorb = [&](SimulationResult&& r) {
    for (auto& trip : r.completed) finished.insert_or_assign(trip.vehicle, std::move(trip));
  };

  std::size_t next_trip = 0;
  try {
    const std::size_t cycles = t.interval_count();
    for (std::size_t c = 0; c < cycles; ++c) {
      const auto wall = std::chrono::steady_clock::now();
      const double t0 = t.start + static_cast<double>(c) * t.delta;
      const double t1 = t0 + t.delta;
      const double horizon_end = t0 + static_cast<double>(t.horizon) * t.delta;

      CycleRecord rec;
      rec.cycle = c;
      rec.start = t0;
      rec.lambda = tolls_at(announced, m, t0);

      const NetworkState estimated =
          estimate_state(world, net, config.scenario.count_noise_sd, derive_seed(seed, kEstimation, c));
      const auto predictor_trips =
          generate_trips(predictor_demand, config.scenario.informed_fraction,
                         derive_seed(seed, kPredictorTrips, c), TimeWindow{t0, horizon_end}, kPredictorIdBase);
      const GuidanceTable initial = world_guidance.slice(t0, t.horizon);
      const std::uint64_t prediction_seed = derive_seed(seed, kPrediction, c);

      auto predict = [&](const TollSchedule& schedule) {
        auto p = predict_consistent(estimated, predictor_trips, schedule, initial, config.prediction,
                                    prediction_seed, ctx);
        return Evaluation{objective(p.result), std::move(p.guidance), p.report};
      };

      std::optional<TollSchedule> next_schedule;
      std::optional<GuidanceTable> new_guidance;
      const bool optimize_now = scenario == Scenario::Predictive && t0 >= t.warmup_end - kTimeEps &&
                                t1 < t.tolling_end - kTimeEps;
      if (optimize_now) {
        DtopConstraints dc;
        dc.lambda = rec.lambda;
        dc.delta.assign(m, config.tolls.delta);
        dc.bounds = TollBounds::uniform(m, config.tolls.lower, config.tolls.upper);
        dc.horizon = t.horizon;
        dc.reduced = config.tolls.reduced;
        GAParams params = config.ga;
        params.seed = derive_seed(seed, kGa, c);
        auto evaluate = [&](const TollSchedule& s) {
          TollSchedule active = s;
          active.set_active_window(t.tolling());
          return predict(active);
        };
        rec.optimized = true;
        try {
          auto result = optimize(dc, params, t0, t.delta, evaluate);
          rec.trace = result.trace;
          rec.best_objective = result.best_objective;
          rec.evaluations = result.evaluations;
          rec.converged_evaluations = result.converged_evaluations;
          next_schedule = std::move(result.schedule);
          next_schedule->set_active_window(t.tolling());
          if (result.best_evaluation && result.best_evaluation->guidance)
            new_guidance = *result.best_evaluation->guidance;
        } catch (const OptimizerAborted& e) {
          rec.aborted = true;
          rec.trace = e.trace();
          rec.note = fmt::format("optimizer aborted, carrying tolls forward: {}", e.what());
          next_schedule = TollSchedule::constant(rec.lambda, t0, t.delta, 1);
          next_schedule->set_active_window(t.tolling());
        }
      }
      if (!new_guidance) {
        const auto ev = predict(next_schedule ? *next_schedule : announced);
        new_guidance = *ev.guidance;
        if (!rec.optimized) {
          rec.evaluations = 1;
          rec.converged_evaluations = ev.consistency->converged ? 1 : 0;
        }
      }

      std::vector<TripRecord> due;
      while (next_trip < world_trips.size() && world_trips[next_trip].departure_time < t1 - kTimeEps)
        due.push_back(world_trips[next_trip++]);
      absorb(simulate(world, due, world_guidance, announced, t1, world_seed, ctx));

      guidance_log.overwrite(*new_guidance);
      world_guidance = *new_guidance;
      if (next_schedule) announced = std::move(*next_schedule);
      rec.next_lambda = tolls_at(announced, m, t1);
      rec.guidance = std::move(*new_guidance);
      rec.wall_clock = seconds_since(wall);
      if (observer) observer(rec);
      out.cycles.push_back(std::move(rec));
    }

    const double cap = t.end + t.drain;
    while (world.vehicle_count() > 0 && world.clock() < cap - kTimeEps) {
      const double until = std::min(world.clock() + t.delta, cap);
      absorb(simulate(world, {}, world_guidance, announced, until, world_seed, ctx));
    }
  } catch (const std::exception& e) {
    out.complete = false;
    out.error = e.what();
  }

  out.stranded = world.vehicle_count();
  out.trips.reserve(world_trips.size());
  for (const auto& trip : world_trips) {
    const auto it = finished.find(trip.vehicle);
    out.trips.push_back(it != finished.end() ? it->second : trip);
  }
  std::sort(out.trips.begin(), out.trips.end(),
            [](const TripRecord& a, const TripRecord& b) { return a.vehicle < b.vehicle; });
  out.world_guidance = std::move(guidance_log);
  return out;
}

std::vector<SeriesRow> departure_series(const std::vector<ReplicationResult>& replications,
                                        const Config& config) {
  const auto& t = config.time;
  std::vector<TripRecord> all;
  for (const auto& r : replications) all.insert(all.end(), r.trips.begin(), r.trips.end());
  const auto groups = avg_travel_time_by_departure(all, t.delta, t.start);
  std::vector<SeriesRow> rows;
  const std::size_t n = t.interval_count();
  rows.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    SeriesRow row;
    row.start = t.start + static_cast<double>(i) * t.delta;
    row.end = row.start + t.delta;
    row.phase = row.start < t.warmup_end - kTimeEps    ? "warmup"
                : row.start < t.tolling_end - kTimeEps ? "tolling"
                                                       : "post";
    if (const auto it = groups.find(static_cast<std::int64_t>(i)); it != groups.end()) row.stats = it->second;
    rows.push_back(std::move(row));
  }
  return rows;
}

ScenarioRun run_scenario(const ScenarioInputs& inputs, const Config& config, Scenario scenario, double level,
                         const std::vector<double>& static_tolls, const CycleObserver& observer) {
  ScenarioRun run;
  run.scenario = scenario;
  run.level = level;
  if (scenario == Scenario::Static) run.static_tolls = static_tolls;
  for (std::size_t r = 0; r < config.scenario.replications; ++r)
    run.replications.push_back(run_replication(inputs, config, scenario, level, r, static_tolls, observer));
  run.series = departure_series(run.replications, config);
  return run;
}

std::vector<double> travel_times_in(const ScenarioRun& run, TimeWindow window) {
  std::vector<double> out;
  for (const auto& r : run.replications)
    for (const auto& trip : r.trips)
      if (trip.experienced_tt && window.contains(trip.departure_time)) out.push_back(*trip.experienced_tt);
  return out;
}

}  // namespace tollopt
