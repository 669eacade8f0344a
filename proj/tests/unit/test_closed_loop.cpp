#include <algorithm>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "tollopt/closed_loop.hpp"

using namespace tollopt;
using tollopt::testing::toy_config_path;

namespace {

/// Toy scenario with a small GA so a replication takes a few seconds.
Config quick_config(std::vector<std::string> extra = {}) {
  std::vector<std::string> o{"scenario.replications=1", "ga.population=6", "ga.max_generations=2"};
  o.insert(o.end(), extra.begin(), extra.end());
  return load_config(toy_config_path(), o);
}

const ScenarioInputs& toy_inputs() {
  static const ScenarioInputs inputs = load_inputs(quick_config());
  return inputs;
}

bool all_zero(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
}

bool in_tolling(const Config& c, double t) { return c.time.tolling().contains(t); }

}  // namespace

TEST(LoadInputs, ToyScenario) {
  const auto& in = toy_inputs();
  EXPECT_EQ(in.network.gantry_count(), 1u);
  EXPECT_EQ(in.paths.at({1, 5}).size(), 2u);
  EXPECT_EQ(in.historical_times.interval_count(), 24u);
  // Historical times reflect congestion on the bottleneck.
  double worst = 0.0;
  for (std::size_t i = 0; i < 24; ++i) worst = std::max(worst, in.historical_times.at(2, i));
  EXPECT_GT(worst, in.network.link(2).free_flow_time);
}

TEST(LoadInputs, MissingNetworkNamesThePath) {
  const Config c = quick_config({"files.network=missing_network.txt"});
  try {
    load_inputs(c);
    FAIL() << "no error";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("missing_network.txt"), std::string::npos);
  }
}

TEST(EstimateState, NoiseFreeCopyAndNoisyCounts) {
  const auto& in = toy_inputs();
  const Config c = quick_config();
  const SupplyContext ctx = make_context(in, c);
  NetworkState world(in.network, c.time.start);
  EXPECT_EQ(estimate_state(world, in.network, 0.3, 1).vehicle_count(), 0u);

  const auto trips = generate_trips(in.historical.scaled(1.2), 1.0, 4, TimeWindow{c.time.start, c.time.start + 1800});
  simulate(world, trips, in.historical_times, TollSchedule::zeros(1, c.time.start, 300.0, 1),
           c.time.start + 1800, 9, ctx);
  ASSERT_GT(world.vehicle_count(), 50u);

  const NetworkState exact = estimate_state(world, in.network, 0.0, 1);
  EXPECT_EQ(exact, world);

  const NetworkState noisy = estimate_state(world, in.network, 0.3, 1);
  std::vector<double> sim, obs;
  for (std::size_t l = 0; l < in.network.link_count(); ++l) {
    sim.push_back(static_cast<double>(noisy.link_occupancy()[l]));
    obs.push_back(static_cast<double>(world.link_occupancy()[l]));
  }
  EXPECT_GT(rmsn(sim, obs), 0.0);
  for (const auto& [id, v] : noisy.vehicles())
    if (!world.vehicles().contains(id)) {
      EXPECT_GE(id, kPhantomIdBase);
    }
}

TEST(ClosedLoop, NoTollChargesNothing) {
  const Config c = quick_config();
  const auto r = run_replication(toy_inputs(), c, Scenario::NoToll, 1.0, 0, {});
  ASSERT_TRUE(r.complete) << r.error;
  EXPECT_EQ(r.cycles.size(), c.time.interval_count());
  for (const auto& cy : r.cycles) {
    EXPECT_TRUE(all_zero(cy.lambda));
    EXPECT_FALSE(cy.optimized);
  }
  EXPECT_EQ(r.stranded, 0u);
  for (const auto& t : r.trips) EXPECT_TRUE(t.experienced_tt);
}

TEST(ClosedLoop, StaticTollsOnlyInsideTollingWindow) {
  const Config c = quick_config();
  const auto r = run_replication(toy_inputs(), c, Scenario::Static, 1.0, 0, {4.5});
  for (const auto& cy : r.cycles)
    EXPECT_EQ(cy.lambda, std::vector<double>{in_tolling(c, cy.start) ? 4.5 : 0.0}) << cy.start;
  EXPECT_THROW(run_replication(toy_inputs(), c, Scenario::Static, 1.0, 0, {}), std::invalid_argument);
}

TEST(ClosedLoop, PredictiveChainingAndWindows) {
  const Config c = quick_config();
  std::size_t observed = 0;
  const auto r = run_replication(toy_inputs(), c, Scenario::Predictive, 1.0, 0, {},
                                 [&](const CycleRecord&) { ++observed; });
  ASSERT_TRUE(r.complete) << r.error;
  EXPECT_EQ(observed, r.cycles.size());
  bool first_tolling = true;
  std::size_t optimized = 0;
  for (std::size_t k = 0; k < r.cycles.size(); ++k) {
    const auto& cy = r.cycles[k];
    if (!in_tolling(c, cy.start)) {
      EXPECT_TRUE(all_zero(cy.lambda)) << cy.start;
    }
    if (in_tolling(c, cy.start) && first_tolling) {
      EXPECT_TRUE(all_zero(cy.lambda));
      first_tolling = false;
    }
    if (k > 0) {
      EXPECT_EQ(cy.lambda, r.cycles[k - 1].next_lambda);
    }
    if (cy.optimized) {
      ++optimized;
      EXPECT_FALSE(cy.aborted) << cy.note;
      ASSERT_TRUE(cy.best_objective);
      for (std::size_t g = 1; g < cy.trace.size(); ++g) EXPECT_LE(cy.trace[g].best, cy.trace[g - 1].best);
      EXPECT_LE(std::abs(cy.next_lambda[0] - cy.lambda[0]), c.tolls.delta);
      EXPECT_GE(cy.next_lambda[0], c.tolls.lower);
      EXPECT_LE(cy.next_lambda[0], c.tolls.upper);
      EXPECT_EQ(cy.evaluations, 12u);
    }
  }
  // Cycles starting 07:20 through 08:20 optimize; the last tolling cycle has no successor inside the window.
  EXPECT_EQ(optimized, 13u);
}

TEST(ClosedLoop, FrozenTollsMatchNoTollBitwise) {
  const Config frozen = quick_config({"tolls.delta=0", "tolls.upper=0"});
  const auto a = run_replication(toy_inputs(), frozen, Scenario::Predictive, 1.0, 0, {});
  const auto b = run_replication(toy_inputs(), frozen, Scenario::NoToll, 1.0, 0, {});
  EXPECT_EQ(a.trips, b.trips);
  EXPECT_EQ(a.world_guidance, b.world_guidance);
}

TEST(ClosedLoop, EmptyTollingWindowMatchesNoToll) {
  const Config c = quick_config({"time.tolling_end=07:20", "time.peak_start=07:20", "time.peak_end=07:20"});
  const auto a = run_replication(toy_inputs(), c, Scenario::Predictive, 1.0, 0, {});
  const auto b = run_replication(toy_inputs(), c, Scenario::NoToll, 1.0, 0, {});
  EXPECT_EQ(a.trips, b.trips);
  for (const auto& cy : a.cycles) EXPECT_FALSE(cy.optimized);
}

TEST(ClosedLoop, Reproducible) {
  const Config c = quick_config();
  const auto a = run_replication(toy_inputs(), c, Scenario::Predictive, 1.1, 3, {});
  const auto b = run_replication(toy_inputs(), c, Scenario::Predictive, 1.1, 3, {});
  EXPECT_EQ(a.trips, b.trips);
  EXPECT_EQ(a.world_guidance, b.world_guidance);
  ASSERT_EQ(a.cycles.size(), b.cycles.size());
  for (std::size_t k = 0; k < a.cycles.size(); ++k) EXPECT_EQ(a.cycles[k].next_lambda, b.cycles[k].next_lambda);
}

TEST(ClosedLoop, ScenariosShareWorldDemand) {
  const Config c = quick_config();
  const auto a = run_replication(toy_inputs(), c, Scenario::NoToll, 1.0, 2, {});
  const auto b = run_replication(toy_inputs(), c, Scenario::Static, 1.0, 2, {3.0});
  ASSERT_EQ(a.trips.size(), b.trips.size());
  for (std::size_t k = 0; k < a.trips.size(); ++k) EXPECT_EQ(a.trips[k].departure_time, b.trips[k].departure_time);
  const auto other = run_replication(toy_inputs(), c, Scenario::NoToll, 1.0, 1, {});
  EXPECT_NE(other.trips.size(), 0u);
  EXPECT_NE(other.trips, a.trips);
}

TEST(ClosedLoop, SeriesCoverEveryInterval) {
  const Config c = quick_config({"scenario.replications=2"});
  const auto run = run_scenario(toy_inputs(), c, Scenario::NoToll, 1.0, {});
  ASSERT_EQ(run.series.size(), c.time.interval_count());
  std::size_t counted = 0;
  for (std::size_t i = 0; i < run.series.size(); ++i) {
    const auto& row = run.series[i];
    EXPECT_DOUBLE_EQ(row.start, c.time.start + 300.0 * static_cast<double>(i));
    const std::string phase = row.start < c.time.warmup_end ? "warmup" : row.start < c.time.tolling_end ? "tolling" : "post";
    EXPECT_EQ(row.phase, phase);
    counted += row.stats.count;
  }
  std::size_t trips = 0;
  for (const auto& rep : run.replications) trips += rep.trips.size();
  EXPECT_EQ(counted, trips);
  EXPECT_EQ(travel_times_in(run, c.time.period()).size(), trips);
}

TEST(ClosedLoop, StaticTollsFromGa) {
  const Config c = quick_config({"ga.population=4"});
  const auto r = compute_static_tolls(toy_inputs(), c);
  ASSERT_EQ(r.best_genes.size(), 1u);
  EXPECT_GE(r.best_genes[0], c.tolls.lower);
  EXPECT_LE(r.best_genes[0], c.tolls.upper);
  for (std::size_t g = 1; g < r.trace.size(); ++g) EXPECT_LE(r.trace[g].best, r.trace[g - 1].best);
  const auto eval = static_evaluator(toy_inputs(), c);
  EXPECT_EQ(eval(r.best_genes).objective, r.best_objective);
}
