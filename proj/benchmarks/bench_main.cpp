#include <benchmark/benchmark.h>

#include "tollopt/closed_loop.hpp"

using namespace tollopt;

namespace {

const Config& toy_config() {
  static const Config c = load_config(std::filesystem::path(TOLLOPT_SOURCE_DIR) / "scenarios/toy/config.ini");
  return c;
}

const ScenarioInputs& toy_inputs() {
  static const ScenarioInputs in = load_inputs(toy_config());
  return in;
}

/// Full-period toy simulation under historical demand, no tolls.
void BM_SimulateToyPeriod(benchmark::State& state) {
  const auto& in = toy_inputs();
  const auto& c = toy_config();
  const SupplyContext ctx = make_context(in, c);
  const auto trips = generate_trips(in.historical.scaled(static_cast<double>(state.range(0)) / 100.0), 1.0, 3,
                                    c.time.period());
  const auto tolls = TollSchedule::zeros(in.network.gantry_count(), c.time.start, c.time.delta, 1);
  for (auto _ : state) {
    NetworkState s(in.network, c.time.start);
    auto r = simulate(s, trips, in.historical_times, tolls, c.time.end + c.time.drain, 7, ctx);
    benchmark::DoNotOptimize(r);
  }
  state.counters["trips"] = static_cast<double>(trips.size());
}
BENCHMARK(BM_SimulateToyPeriod)->Arg(100)->Arg(120)->Unit(benchmark::kMillisecond);

/// One batch of static evaluations at different thread counts.
void BM_EvaluateBatch(benchmark::State& state) {
  const auto eval = static_evaluator(toy_inputs(), toy_config());
  const GeneEvaluator ge = [&](std::span<const double> g) { return eval(std::vector<double>(g.begin(), g.end())); };
  for (auto _ : state) {
    Population pop(8);
    for (std::size_t i = 0; i < pop.size(); ++i) pop[i].genes = {1.25 * static_cast<double>(i)};
    benchmark::DoNotOptimize(evaluate_batch(pop, pop.size(), static_cast<std::size_t>(state.range(0)), ge));
  }
}
BENCHMARK(BM_EvaluateBatch)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

/// GA overhead with a trivial objective.
void BM_GeneticSearchSphere(benchmark::State& state) {
  DtopConstraints c;
  c.lambda = {0.0, 0.0, 0.0};
  c.delta = {2.0, 2.0, 2.0};
  c.bounds = TollBounds::uniform(3, 0.0, 10.0);
  c.horizon = 4;
  c.reduced = false;
  GAParams p;
  p.population_size = 40;
  p.max_generations = static_cast<std::size_t>(state.range(0));
  p.batch_size = 40;
  const ScheduleEvaluator sphere = [](const TollSchedule& s) {
    Evaluation e;
    for (std::size_t r = 0; r < s.interval_count(); ++r)
      for (double x : s.row(r)) e.objective += (x - 3.0) * (x - 3.0);
    return e;
  };
  for (auto _ : state) benchmark::DoNotOptimize(optimize(c, p, 0.0, 300.0, sphere));
}
BENCHMARK(BM_GeneticSearchSphere)->Arg(10)->Arg(50)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
