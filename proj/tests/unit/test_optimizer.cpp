#include <chrono>
#include <cmath>
#include <mutex>
#include <random>
#include <thread>

#include <gtest/gtest.h>

#include "tollopt/optimizer.hpp"

using namespace tollopt;

namespace {

DtopConstraints tube(std::vector<double> lambda, double delta, double lo, double hi, std::size_t horizon,
                     bool reduced) {
  DtopConstraints c;
  const std::size_t m = lambda.size();
  c.lambda = std::move(lambda);
  c.delta.assign(m, delta);
  c.bounds = TollBounds::uniform(m, lo, hi);
  c.horizon = horizon;
  c.reduced = reduced;
  return c;
}

GAParams small_params(std::size_t n = 8, std::size_t generations = 5, std::uint64_t seed = 3) {
  GAParams p;
  p.population_size = n;
  p.batch_size = n;
  p.max_generations = generations;
  p.seed = seed;
  return p;
}

Individual with_genes(std::vector<double> g) {
  Individual ind;
  ind.genes = std::move(g);
  return ind;
}

Individual evaluated(double objective) {
  Individual ind;
  ind.genes = {objective};
  ind.objective = objective;
  return ind;
}

Evaluation sphere(std::span<const double> g) {
  double s = 0.0;
  for (double x : g) s += (x - 3.3) * (x - 3.3);
  return Evaluation{s, std::nullopt, std::nullopt};
}

/// Schedule-level check of the delta tube and box, written from the
/// constraint definition rather than through the gene layout.
bool schedule_feasible(const TollSchedule& s, const DtopConstraints& c) {
  if (s.interval_count() != c.horizon || s.row(0) != c.lambda) return false;
  for (std::size_t h = 1; h < c.horizon; ++h)
    for (std::size_t i = 0; i < c.gantries(); ++i) {
      const double x = s.row(h)[i];
      if (x < c.bounds.lower[i] || x > c.bounds.upper[i]) return false;
      if (x > s.row(h - 1)[i] + c.delta[i] || x < s.row(h - 1)[i] - c.delta[i]) return false;
      if (c.reduced && x != s.row(1)[i]) return false;
    }
  return true;
}

}  // namespace

TEST(Params, Validation) {
  GAParams p = small_params();
  EXPECT_NO_THROW(p.validate());
  p.population_size = 7;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = small_params();
  p.crossover_probability = 1.5;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = small_params();
  p.batch_size = 9;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = small_params();
  p.time_budget = 0.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(Constraints, GeneCount) {
  const auto full = tube(std::vector<double>(16, 0.0), 1.0, 0.0, 10.0, 3, false);
  const auto reduced = tube(std::vector<double>(16, 0.0), 1.0, 0.0, 10.0, 3, true);
  EXPECT_EQ(full.gene_count(), 32u);
  EXPECT_EQ(reduced.gene_count(), 16u);
}

TEST(Clamp, Examples) {
  const auto c = tube({2.0}, 0.5, 0.0, 5.0, 3, false);
  const std::vector<double> feasible{2.3, 2.7};
  EXPECT_EQ(clamp_to_constraints(feasible, c), feasible);
  const std::vector<double> high{3.2, 2.5};
  EXPECT_EQ(clamp_to_constraints(high, c)[0], 2.5);

  const auto r = tube({1.0}, 0.5, 0.0, 1.2, 4, true);
  const std::vector<double> two{2.0};
  EXPECT_EQ(clamp_to_constraints(two, r), std::vector<double>{1.2});

  // Lambda outside the box leaves an empty interval.
  auto bad = tube({5.0}, 1.0, 0.0, 3.0, 3, true);
  EXPECT_THROW(clamp_to_constraints(two, bad), InfeasibleConstraints);
  EXPECT_THROW(bad.validate(), InfeasibleConstraints);
}

TEST(Clamp, ChainsRowByRow) {
  const auto c = tube({2.0}, 0.5, 0.0, 5.0, 4, false);
  const std::vector<double> g{9.0, 9.0, 0.0};
  EXPECT_EQ(clamp_to_constraints(g, c), (std::vector<double>{2.5, 3.0, 2.5}));
}

TEST(Clamp, ProjectionIsFeasibleAndIdempotent) {
  GaRng rng(11);
  std::uniform_real_distribution<double> u(-20.0, 20.0);
  for (bool reduced : {false, true}) {
    const auto c = tube({1.0, 4.0, 9.5}, 0.75, 0.0, 10.0, 5, reduced);
    for (int trial = 0; trial < 2000; ++trial) {
      std::vector<double> g(c.gene_count());
      for (auto& x : g) x = u(rng);
      const auto once = clamp_to_constraints(g, c);
      EXPECT_TRUE(satisfies_constraints(once, c));
      EXPECT_EQ(clamp_to_constraints(once, c), once);
      EXPECT_TRUE(schedule_feasible(expand_schedule(once, c, 0.0, 300.0), c));
      const auto box = reachable_box(c);
      for (std::size_t k = 0; k < once.size(); ++k) {
        EXPECT_GE(once[k], box.lower[k]);
        EXPECT_LE(once[k], box.upper[k]);
      }
    }
  }
}

TEST(ExpandSchedule, LambdaFirstAndReducedRepeat) {
  const auto c = tube({1.0, 2.0}, 1.0, 0.0, 10.0, 3, true);
  const std::vector<double> g{1.5, 2.5};
  const auto s = expand_schedule(g, c, 600.0, 300.0);
  EXPECT_EQ(s.rows(), (std::vector<std::vector<double>>{{1.0, 2.0}, {1.5, 2.5}, {1.5, 2.5}}));
  EXPECT_TRUE(s.reduced());
  EXPECT_EQ(s.toll(1, 650.0), 2.0);
  EXPECT_EQ(s.toll(1, 950.0), 2.5);
}

TEST(InitPopulation, ZeroDeltaIsLambda) {
  const auto c = tube({2.0, 7.0}, 0.0, 0.0, 10.0, 4, false);
  GaRng rng(1);
  for (const auto& ind : init_population(small_params(20), c, rng))
    EXPECT_EQ(ind.genes, (std::vector<double>{2.0, 7.0, 2.0, 7.0, 2.0, 7.0}));
}

TEST(InitPopulation, ChainedTubes) {
  const auto c = tube({2.0}, 0.5, 0.0, 5.0, 3, false);
  GaRng rng(2);
  const auto pop = init_population(small_params(200), c, rng);
  ASSERT_EQ(pop.size(), 200u);
  for (const auto& ind : pop) {
    EXPECT_GE(ind.genes[0], 1.5);
    EXPECT_LE(ind.genes[0], 2.5);
    EXPECT_GE(ind.genes[1], std::max(ind.genes[0] - 0.5, 0.0));
    EXPECT_LE(ind.genes[1], std::min(ind.genes[0] + 0.5, 5.0));
    EXPECT_TRUE(satisfies_constraints(ind.genes, c));
    EXPECT_FALSE(ind.objective);
  }
}

TEST(InitPopulation, Coverage) {
  const auto c = tube({0.5}, 2.0, 0.0, 10.0, 2, true);  // feasible [0, 2.5]
  GaRng rng(3);
  const auto pop = init_population(small_params(10000), c, rng);
  double lo = 1e9, hi = -1e9;
  for (const auto& ind : pop) {
    lo = std::min(lo, ind.genes[0]);
    hi = std::max(hi, ind.genes[0]);
  }
  EXPECT_GE(hi - lo, 0.95 * 2.5);
}

TEST(Sbx, IdenticalParentsAndZeroProbability) {
  GaRng rng(4);
  const std::vector<double> lo(3, 0.0), hi(3, 10.0);
  const auto p = with_genes({1.0, 5.0, 9.0});
  for (int i = 0; i < 100; ++i) {
    auto [a, b] = sbx_crossover(p, p, 15.0, 1.0, lo, hi, rng);
    EXPECT_EQ(a.genes, p.genes);
    EXPECT_EQ(b.genes, p.genes);
  }
  const auto q = with_genes({2.0, 2.0, 2.0});
  for (int i = 0; i < 100; ++i) {
    auto [a, b] = sbx_crossover(p, q, 15.0, 0.0, lo, hi, rng);
    EXPECT_EQ(a.genes, p.genes);
    EXPECT_EQ(b.genes, q.genes);
  }
}

TEST(Sbx, MeanPreserving) {
  GaRng rng(5);
  const std::vector<double> lo{0.0}, hi{10.0};
  const auto p1 = with_genes({1.0});
  const auto p2 = with_genes({3.0});
  double sum = 0.0;
  for (int i = 0; i < 10000; ++i) {
    auto [a, b] = sbx_crossover(p1, p2, 15.0, 1.0, lo, hi, rng);
    sum += a.genes[0] + b.genes[0];
    EXPECT_GE(a.genes[0], 0.0);
    EXPECT_LE(b.genes[0], 10.0);
  }
  EXPECT_NEAR(sum / 20000.0, 2.0, 0.05);
}

TEST(Mutation, ZeroProbabilityKeepsEvaluation) {
  GaRng rng(6);
  const std::vector<double> lo(2, 0.0), hi(2, 10.0);
  auto ind = with_genes({1.0, 2.0});
  ind.objective = 4.0;
  const auto m = polynomial_mutation(ind, 20.0, 0.0, lo, hi, rng);
  EXPECT_EQ(m.genes, ind.genes);
  EXPECT_EQ(m.objective, 4.0);
}

TEST(Mutation, LowerBoundMovesUp) {
  GaRng rng(7);
  const std::vector<double> lo{0.0}, hi{10.0};
  const auto ind = with_genes({0.0});
  for (int i = 0; i < 2000; ++i) EXPECT_GE(polynomial_mutation(ind, 20.0, 1.0, lo, hi, rng).genes[0], 0.0);
}

TEST(Mutation, BinomialCount) {
  GaRng rng(8);
  const std::vector<double> lo(16, 0.0), hi(16, 10.0);
  const auto ind = with_genes(std::vector<double>(16, 5.0));
  double changed = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const auto m = polynomial_mutation(ind, 20.0, 0.1, lo, hi, rng);
    for (std::size_t k = 0; k < 16; ++k) changed += m.genes[k] != 5.0 ? 1.0 : 0.0;
  }
  EXPECT_NEAR(changed / 10000.0, 1.6, 0.1);
}

TEST(Tournament, Basics) {
  GaRng rng(9);
  Population one{evaluated(1.0)};
  one[0].rank = 1;
  EXPECT_EQ(tournament_select(one, rng), 0u);

  Population two{evaluated(1.0), evaluated(2.0)};
  two[0].rank = 1;
  two[1].rank = 2;
  std::size_t first = 0;
  for (int i = 0; i < 10000; ++i) first += tournament_select(two, rng) == 0 ? 1 : 0;
  EXPECT_NEAR(static_cast<double>(first) / 10000.0, 0.75, 0.02);

  GaRng a(10), b(10);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(tournament_select(two, a), tournament_select(two, b));

  Population unranked{evaluated(1.0), evaluated(2.0)};
  EXPECT_THROW(tournament_select(unranked, rng), std::logic_error);
}

TEST(RankAndTruncate, Examples) {
  Population mixed{evaluated(4.0), evaluated(3.0), evaluated(2.0), evaluated(1.0)};
  const auto kept = rank_and_truncate(mixed, 2);
  ASSERT_EQ(kept.size(), 2u);
  EXPECT_EQ(*kept[0].objective, 1.0);
  EXPECT_EQ(*kept[1].objective, 2.0);
  EXPECT_EQ(kept[0].rank, 1u);
  EXPECT_EQ(kept[1].rank, 2u);

  Population ties;
  for (int i = 0; i < 4; ++i) {
    ties.push_back(evaluated(7.0));
    ties.back().genes = {static_cast<double>(i)};
  }
  const auto stable = rank_and_truncate(ties, 2);
  EXPECT_EQ(stable[0].genes[0], 0.0);
  EXPECT_EQ(stable[1].genes[0], 1.0);

  Population elitism{evaluated(1.0), evaluated(2.0), evaluated(5.0), evaluated(6.0)};
  const auto parents = rank_and_truncate(elitism, 2);
  EXPECT_EQ(*parents[0].objective, 1.0);
  EXPECT_EQ(*parents[1].objective, 2.0);

  Population missing{evaluated(1.0), with_genes({2.0})};
  EXPECT_THROW(rank_and_truncate(missing, 1), std::logic_error);
}

TEST(EvaluateBatch, BatchSizeDoesNotMatter) {
  const auto c = tube({1.0, 2.0}, 2.0, 0.0, 10.0, 3, false);
  GaRng rng(12);
  const auto pop = init_population(small_params(12), c, rng);
  std::vector<double> reference;
  for (std::size_t batch : {1u, 5u, 12u}) {
    for (std::size_t jobs : {1u, 4u}) {
      Population p = pop;
      EXPECT_EQ(evaluate_batch(p, batch, jobs, sphere), 12u);
      std::vector<double> got;
      for (const auto& ind : p) got.push_back(*ind.objective);
      if (reference.empty()) reference = got;
      EXPECT_EQ(got, reference);
    }
  }
  for (std::size_t k = 0; k < pop.size(); ++k) EXPECT_EQ(reference[k], sphere(pop[k].genes).objective);
}

TEST(EvaluateBatch, SkipsEvaluatedAndReportsFailures) {
  Population p{with_genes({1.0}), evaluated(5.0), with_genes({2.0}), with_genes({3.0})};
  EXPECT_EQ(evaluate_batch(p, 2, 2, sphere), 3u);
  EXPECT_EQ(*p[1].objective, 5.0);

  Population q{with_genes({1.0}), with_genes({2.0}), with_genes({-1.0}), with_genes({3.0})};
  try {
    evaluate_batch(q, 4, 2, [](std::span<const double> g) {
      if (g[0] < 0) throw std::runtime_error("boom");
      return Evaluation{g[0], std::nullopt, std::nullopt};
    });
    FAIL() << "no failure surfaced";
  } catch (const EvaluationFailure& e) {
    EXPECT_EQ(e.index(), 2u);
  }

  Population r{with_genes({20.0})};
  EXPECT_THROW(evaluate_batch(r, 1, 1, sphere, [](std::span<const double> g) { return g[0] <= 10.0; }),
               std::logic_error);
}

TEST(EvaluateBatch, ConcurrencyShortensWallClock) {
  Population pop;
  for (int i = 0; i < 8; ++i) pop.push_back(with_genes({static_cast<double>(i)}));
  auto slow = [](std::span<const double> g) {
    std::this_thread::sleep_for(std::chrono::milliseconds(25));
    return Evaluation{g[0], std::nullopt, std::nullopt};
  };
  auto timed = [&](std::size_t batch, std::size_t jobs) {
    Population p = pop;
    const auto t0 = std::chrono::steady_clock::now();
    evaluate_batch(p, batch, jobs, slow);
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };
  EXPECT_LE(timed(8, 8), 1.1 * timed(1, 8));
}

TEST(Optimize, ZeroDemandIsFlat) {
  const auto c = tube({0.0}, 1.0, 0.0, 10.0, 3, false);
  const auto r = optimize(c, small_params(), 0.0, 300.0,
                          [](const TollSchedule&) { return Evaluation{0.0, std::nullopt, std::nullopt}; });
  EXPECT_EQ(r.best_objective, 0.0);
  for (const auto& row : r.trace) EXPECT_EQ(row.best, 0.0);
  EXPECT_TRUE(satisfies_constraints(r.best_genes, c));
}

TEST(Optimize, SingleGenerationIsBestOfInitial) {
  const auto c = tube({1.0, 1.0}, 3.0, 0.0, 10.0, 3, false);
  const auto r = optimize(c, small_params(10, 1), 0.0, 300.0,
                          [](const TollSchedule& s) { return sphere(s.row(1)); });
  EXPECT_EQ(r.trace.size(), 1u);
  EXPECT_EQ(r.evaluations, 10u);
  double best = 1e300;
  for (const auto& ind : r.population) best = std::min(best, *ind.objective);
  EXPECT_EQ(r.best_objective, best);
}

TEST(Optimize, CollapsedBoundsReturnThatVector) {
  const auto c = tube({4.0, 4.0}, 2.0, 4.0, 4.0, 3, true);
  const auto r = optimize(c, small_params(), 0.0, 300.0,
                          [](const TollSchedule& s) { return sphere(s.row(1)); });
  EXPECT_EQ(r.best_genes, (std::vector<double>{4.0, 4.0}));
  EXPECT_EQ(r.schedule.row(2), (std::vector<double>{4.0, 4.0}));
}

TEST(Optimize, EveryEvaluatedScheduleIsFeasibleAndTraceMonotone) {
  for (bool reduced : {false, true}) {
    const auto c = tube({3.0, 0.0, 9.0}, 1.5, 0.0, 10.0, 4, reduced);
    std::size_t checked = 0;
    std::mutex mu;
    const auto r = optimize(c, small_params(16, 12, 21), 600.0, 300.0, [&](const TollSchedule& s) {
      std::lock_guard lock(mu);
      EXPECT_TRUE(schedule_feasible(s, c));
      ++checked;
      double f = 0.0;
      for (std::size_t h = 1; h < s.interval_count(); ++h) f += sphere(s.row(h)).objective;
      return Evaluation{f, std::nullopt, std::nullopt};
    });
    EXPECT_EQ(checked, r.evaluations);
    EXPECT_EQ(r.evaluations, 16u * 12u);
    for (std::size_t g = 1; g < r.trace.size(); ++g) EXPECT_LE(r.trace[g].best, r.trace[g - 1].best);
    EXPECT_EQ(r.schedule.row(0), c.lambda);
    EXPECT_DOUBLE_EQ(r.schedule.start(), 600.0);
  }
}

TEST(Optimize, DeterministicAcrossJobs) {
  const auto c = tube({1.0}, 4.0, 0.0, 10.0, 3, false);
  auto eval = [](const TollSchedule& s) { return sphere(s.row(1)); };
  auto p = small_params(12, 6, 77);
  const auto a = optimize(c, p, 0.0, 300.0, eval);
  p.jobs = 4;
  p.batch_size = 3;
  const auto b = optimize(c, p, 0.0, 300.0, eval);
  EXPECT_EQ(a.best_genes, b.best_genes);
  ASSERT_EQ(a.trace.size(), b.trace.size());
  for (std::size_t g = 0; g < a.trace.size(); ++g) EXPECT_EQ(a.trace[g].best, b.trace[g].best);
}

TEST(Optimize, TimeBudgetStopsNewGenerations) {
  const auto c = tube({1.0}, 4.0, 0.0, 10.0, 3, true);
  auto p = small_params(4, 1000, 5);
  p.time_budget = 0.3;
  const auto r = optimize(c, p, 0.0, 300.0, [](const TollSchedule& s) {
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
    return sphere(s.row(1));
  });
  EXPECT_LT(r.trace.size(), 1000u);
  for (double started : r.generation_starts) EXPECT_LE(started, p.time_budget);
  EXPECT_EQ(r.generation_starts.size(), r.trace.size());
}

TEST(Optimize, AbortCarriesPartialTrace) {
  const auto c = tube({1.0}, 4.0, 0.0, 10.0, 3, true);
  std::size_t calls = 0;
  try {
    optimize(c, small_params(4, 5), 0.0, 300.0, [&](const TollSchedule& s) {
      if (++calls > 6) throw std::runtime_error("simulator failure");
      return sphere(s.row(1));
    });
    FAIL() << "no abort";
  } catch (const OptimizerAborted& e) {
    EXPECT_EQ(e.trace().size(), 1u);
  }
}

TEST(OptimizeStatic, ZeroDemandAndBox) {
  const auto bounds = TollBounds::uniform(2, 1.0, 4.0);
  const auto r = optimize_static(bounds, small_params(), [](const std::vector<double>& g) {
    EXPECT_EQ(g.size(), 2u);
    for (double x : g) {
      EXPECT_GE(x, 1.0);
      EXPECT_LE(x, 4.0);
    }
    return Evaluation{0.0, std::nullopt, std::nullopt};
  });
  EXPECT_EQ(r.best_objective, 0.0);
}

TEST(GridSearch, RowsAndArgmin) {
  const std::vector<double> lo1{0.0}, hi1{10.0};
  const auto one = grid_search(lo1, hi1, 5, sphere);
  ASSERT_EQ(one.rows.size(), 5u);
  EXPECT_EQ(one.rows[1].genes[0], 2.5);
  EXPECT_EQ(one.argmin, 1u);

  const std::vector<double> lo2{0.0, 0.0}, hi2{4.0, 10.0};
  const auto two = grid_search(lo2, hi2, 3, sphere, 2);
  ASSERT_EQ(two.rows.size(), 9u);
  EXPECT_EQ(two.rows[1].genes, (std::vector<double>{0.0, 5.0}));
  EXPECT_EQ(two.rows[3].genes, (std::vector<double>{2.0, 0.0}));
  for (const auto& row : two.rows) EXPECT_LE(two.rows[two.argmin].objective, row.objective);

  const std::vector<double> lo5(5, 0.0), hi5(5, 1.0);
  EXPECT_THROW(grid_search(lo5, hi5, 7, sphere), GridTooLarge);
}

TEST(GridSearch, GaMatchesGridOnSmoothObjective) {
  const std::vector<double> lo{0.0}, hi{10.0};
  const auto grid = grid_search(lo, hi, 5, sphere);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto ga = optimize_static(TollBounds::uniform(1, 0.0, 10.0), small_params(12, 10, seed),
                                    [](const std::vector<double>& g) { return sphere(g); });
    EXPECT_LE(ga.best_objective, grid.rows[grid.argmin].objective * 1.01);
  }
}
