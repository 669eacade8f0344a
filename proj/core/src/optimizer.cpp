#include "tollopt/optimizer.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <numeric>
#include <thread>

#include <fmt/format.h>

#include "tollopt/rng.hpp"

namespace tollopt {
namespace {

constexpr double kSbxEps = 1e-14;

double uniform_in(GaRng& rng, double lo, double hi) {
  if (hi <= lo) return lo;
  const double x = lo + uniform01(rng) * (hi - lo);
  return std::min(x, hi);
}

// Tube for one gene given its predecessor value.
std::pair<double, double> tube(double prev, double delta, double lo, double hi) {
  return {std::max(prev - delta, lo), std::min(prev + delta, hi)};
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

TraceRow summarize(const Population& pop, std::size_t generation, double elapsed) {
  TraceRow row{generation, 0.0, 0.0, elapsed};
  if (pop.empty()) return row;
  row.best = *pop.front().objective;
  double sum = 0.0;
  for (const auto& ind : pop) {
    row.best = std::min(row.best, *ind.objective);
    sum += *ind.objective;
  }
  row.mean = sum / static_cast<double>(pop.size());
  return row;
}

}  // namespace

void GAParams::validate() const {
  if (population_size < 2 || population_size % 2 != 0)
    throw std::invalid_argument("population size must be even and at least 2");
  auto prob = [](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument(fmt::format("{} must lie in [0,1]", name));
  };
  prob(crossover_probability, "crossover probability");
  prob(mutation_probability, "mutation probability");
  if (!(sbx_eta >= 0.0) || !(mutation_eta >= 0.0))
    throw std::invalid_argument("distribution indices must be non-negative");
  if (max_generations < 1) throw std::invalid_argument("max_generations must be at least 1");
  if (!(time_budget > 0.0)) throw std::invalid_argument("time budget must be positive");
  if (batch_size < 1 || batch_size > population_size)
    throw std::invalid_argument("batch size must lie in [1, population size]");
  if (jobs < 1) throw std::invalid_argument("jobs must be at least 1");
}

void DtopConstraints::validate() const {
  const std::size_t m = lambda.size();
  if (horizon < 2) throw InfeasibleConstraints("prediction horizon must be at least 2 intervals");
  if (delta.size() != m || bounds.lower.size() != m || bounds.upper.size() != m)
    throw InfeasibleConstraints("lambda, delta and bounds differ in length");
  for (std::size_t i = 0; i < m; ++i) {
    if (!(bounds.lower[i] <= bounds.upper[i]))
      throw InfeasibleConstraints(fmt::format("gantry {}: lower bound above upper bound", i));
    if (!(delta[i] >= 0.0)) throw InfeasibleConstraints(fmt::format("gantry {}: negative delta", i));
    if (!(lambda[i] >= bounds.lower[i] && lambda[i] <= bounds.upper[i]))
      throw InfeasibleConstraints(
          fmt::format("gantry {}: lambda {} outside [{}, {}]", i, lambda[i], bounds.lower[i], bounds.upper[i]));
  }
}

std::vector<double> clamp_to_constraints(std::span<const double> genes, const DtopConstraints& c) {
  const std::size_t m = c.gantries();
  if (genes.size() != c.gene_count())
    throw std::invalid_argument(
        fmt::format("expected {} genes, got {}", c.gene_count(), genes.size()));
  std::vector<double> out(genes.begin(), genes.end());
  const std::size_t rows = c.reduced ? 1 : c.horizon - 1;
  for (std::size_t h = 0; h < rows; ++h) {
    for (std::size_t i = 0; i < m; ++i) {
      const double prev = h == 0 ? c.lambda[i] : out[(h - 1) * m + i];
      const auto [lo, hi] = tube(prev, c.delta[i], c.bounds.lower[i], c.bounds.upper[i]);
      if (lo > hi)
        throw InfeasibleConstraints(
            fmt::format("gantry {}: empty feasible interval [{}, {}]", i, lo, hi));
      double& x = out[h * m + i];
      x = std::clamp(x, lo, hi);
    }
  }
  return out;
}

bool satisfies_constraints(std::span<const double> genes, const DtopConstraints& c) {
  const std::size_t m = c.gantries();
  if (genes.size() != c.gene_count()) return false;
  const std::size_t rows = c.reduced ? 1 : c.horizon - 1;
  for (std::size_t h = 0; h < rows; ++h) {
    for (std::size_t i = 0; i < m; ++i) {
      const double x = genes[h * m + i];
      const double prev = h == 0 ? c.lambda[i] : genes[(h - 1) * m + i];
      if (!(x >= c.bounds.lower[i] && x <= c.bounds.upper[i])) return false;
      if (!(x >= prev - c.delta[i] && x <= prev + c.delta[i])) return false;
    }
  }
  return true;
}

TollBounds reachable_box(const DtopConstraints& c) {
  const std::size_t m = c.gantries();
  const std::size_t rows = c.reduced ? 1 : c.horizon - 1;
  TollBounds box;
  box.lower.resize(m * rows);
  box.upper.resize(m * rows);
  for (std::size_t h = 0; h < rows; ++h) {
    for (std::size_t i = 0; i < m; ++i) {
      const double reach = static_cast<double>(h + 1) * c.delta[i];
      box.lower[h * m + i] = std::max(c.lambda[i] - reach, c.bounds.lower[i]);
      box.upper[h * m + i] = std::min(c.lambda[i] + reach, c.bounds.upper[i]);
    }
  }
  return box;
}

TollSchedule expand_schedule(std::span<const double> genes, const DtopConstraints& c, double start,
                             double interval) {
  const std::size_t m = c.gantries();
  if (genes.size() != c.gene_count())
    throw std::invalid_argument("gene vector does not match the constraint layout");
  std::vector<std::vector<double>> rows;
  rows.reserve(c.horizon);
  rows.push_back(c.lambda);
  for (std::size_t h = 1; h < c.horizon; ++h) {
    const std::size_t src = c.reduced ? 0 : h - 1;
    rows.emplace_back(genes.begin() + static_cast<std::ptrdiff_t>(src * m),
                      genes.begin() + static_cast<std::ptrdiff_t>((src + 1) * m));
  }
  return TollSchedule(start, interval, std::move(rows), c.reduced);
}

EvaluationFailure::EvaluationFailure(std::size_t index, const std::string& what)
    : std::runtime_error(fmt::format("evaluation of strategy {} failed: {}", index, what)),
      index_(index) {}

Population init_population(const GAParams& params, const DtopConstraints& c, GaRng& rng) {
  c.validate();
  const std::size_t m = c.gantries();
  const std::size_t rows = c.reduced ? 1 : c.horizon - 1;
  Population pop(params.population_size);
  for (auto& ind : pop) {
    ind.genes.resize(m * rows);
    for (std::size_t h = 0; h < rows; ++h) {
      for (std::size_t i = 0; i < m; ++i) {
        const double prev = h == 0 ? c.lambda[i] : ind.genes[(h - 1) * m + i];
        const auto [lo, hi] = tube(prev, c.delta[i], c.bounds.lower[i], c.bounds.upper[i]);
        ind.genes[h * m + i] = uniform_in(rng, lo, hi);
      }
    }
  }
  return pop;
}

std::pair<Individual, Individual> sbx_crossover(const Individual& p1, const Individual& p2,
                                                double eta_c, double crossover_probability,
                                                std::span<const double> lower,
                                                std::span<const double> upper, GaRng& rng) {
  if (p1.genes.size() != p2.genes.size() || lower.size() != p1.genes.size() ||
      upper.size() != p1.genes.size())
    throw std::invalid_argument("crossover operands differ in length");
  Individual c1{p1.genes, {}, {}, {}};
  Individual c2{p2.genes, {}, {}, {}};
  if (!(uniform01(rng) < crossover_probability)) return {c1, c2};

  const double exponent = 1.0 / (eta_c + 1.0);
  auto betaq = [&](double beta, double u) {
    const double alpha = 2.0 - std::pow(beta, -(eta_c + 1.0));
    if (u <= 1.0 / alpha) return std::pow(u * alpha, exponent);
    return std::pow(1.0 / (2.0 - u * alpha), exponent);
  };

  for (std::size_t i = 0; i < c1.genes.size(); ++i) {
    if (uniform01(rng) > 0.5) continue;
    const double a = p1.genes[i];
    const double b = p2.genes[i];
    if (std::abs(a - b) <= kSbxEps) continue;
    const double y1 = std::min(a, b);
    const double y2 = std::max(a, b);
    const double yl = lower[i];
    const double yu = upper[i];
    const double u = uniform01(rng);
    const double span = y2 - y1;
    double lo_child = 0.5 * ((y1 + y2) - betaq(1.0 + 2.0 * (y1 - yl) / span, u) * span);
    double hi_child = 0.5 * ((y1 + y2) + betaq(1.0 + 2.0 * (yu - y2) / span, u) * span);
    lo_child = std::clamp(lo_child, yl, yu);
    hi_child = std::clamp(hi_child, yl, yu);
    if (uniform01(rng) <= 0.5) {
      c1.genes[i] = hi_child;
      c2.genes[i] = lo_child;
    } else {
      c1.genes[i] = lo_child;
      c2.genes[i] = hi_child;
    }
  }
  return {std::move(c1), std::move(c2)};
}

Individual polynomial_mutation(const Individual& ind, double eta_m, double p_m,
                               std::span<const double> lower, std::span<const double> upper,
                               GaRng& rng) {
  if (lower.size() != ind.genes.size() || upper.size() != ind.genes.size())
    throw std::invalid_argument("mutation bounds differ in length");
  Individual out{ind.genes, {}, {}, {}};
  bool changed = false;
  const double exponent = 1.0 / (eta_m + 1.0);
  for (std::size_t i = 0; i < out.genes.size(); ++i) {
    if (!(uniform01(rng) < p_m)) continue;
    const double yl = lower[i];
    const double yu = upper[i];
    if (!(yu > yl)) continue;
    const double y = std::clamp(out.genes[i], yl, yu);
    const double d1 = (y - yl) / (yu - yl);
    const double d2 = (yu - y) / (yu - yl);
    const double r = uniform01(rng);
    double dq = 0.0;
    if (r <= 0.5) {
      const double v = 2.0 * r + (1.0 - 2.0 * r) * std::pow(1.0 - d1, eta_m + 1.0);
      dq = std::pow(v, exponent) - 1.0;
    } else {
      const double v = 2.0 * (1.0 - r) + 2.0 * (r - 0.5) * std::pow(1.0 - d2, eta_m + 1.0);
      dq = 1.0 - std::pow(v, exponent);
    }
    out.genes[i] = std::clamp(y + dq * (yu - yl), yl, yu);
    changed = true;
  }
  if (!changed) {
    out.objective = ind.objective;
    out.rank = ind.rank;
    out.evaluation = ind.evaluation;
  }
  return out;
}

std::size_t tournament_select(const Population& population, GaRng& rng) {
  if (population.empty()) throw std::invalid_argument("tournament on an empty population");
  const auto n = population.size();
  auto draw = [&] {
    return std::min(static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)), n - 1);
  };
  const std::size_t i = draw();
  const std::size_t j = draw();
  const auto& a = population[i];
  const auto& b = population[j];
  if (!a.rank || !b.rank) throw std::logic_error("tournament over unranked individuals");
  if (*a.rank != *b.rank) return *a.rank < *b.rank ? i : j;
  return std::min(i, j);
}

Population rank_and_truncate(Population mixed, std::size_t n) {
  for (std::size_t i = 0; i < mixed.size(); ++i)
    if (!mixed[i].objective)
      throw std::logic_error(fmt::format("individual {} has not been evaluated", i));
  std::stable_sort(mixed.begin(), mixed.end(),
                   [](const Individual& a, const Individual& b) { return *a.objective < *b.objective; });
  if (mixed.size() > n) mixed.resize(n);
  for (std::size_t i = 0; i < mixed.size(); ++i) mixed[i].rank = i + 1;
  return mixed;
}

std::size_t evaluate_batch(Population& strategies, std::size_t batch_size, std::size_t jobs,
                           const GeneEvaluator& evaluator,
                           const std::function<bool(std::span<const double>)>& feasible) {
  if (batch_size < 1) throw std::invalid_argument("batch size must be at least 1");
  if (jobs < 1) throw std::invalid_argument("jobs must be at least 1");
  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < strategies.size(); ++i) {
    if (strategies[i].objective) continue;
    if (feasible && !feasible(strategies[i].genes))
      throw std::logic_error(fmt::format("strategy {} violates the toll constraints", i));
    pending.push_back(i);
  }

  std::vector<std::shared_ptr<const Evaluation>> results(strategies.size());
  std::vector<std::exception_ptr> errors(strategies.size());
  auto run_one = [&](std::size_t idx) {
    try {
      results[idx] = std::make_shared<const Evaluation>(evaluator(strategies[idx].genes));
    } catch (...) {
      errors[idx] = std::current_exception();
    }
  };

  for (std::size_t begin = 0; begin < pending.size(); begin += batch_size) {
    const std::size_t end = std::min(begin + batch_size, pending.size());
    const std::size_t workers = std::min(jobs, end - begin);
    if (workers <= 1) {
      for (std::size_t k = begin; k < end; ++k) run_one(pending[k]);
    } else {
      std::atomic<std::size_t> next{begin};
      std::vector<std::thread> pool;
      pool.reserve(workers);
      for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
          for (std::size_t k = next++; k < end; k = next++) run_one(pending[k]);
        });
      }
      for (auto& t : pool) t.join();
    }
    for (std::size_t k = begin; k < end; ++k) {
      const std::size_t idx = pending[k];
      if (!errors[idx]) continue;
      try {
        std::rethrow_exception(errors[idx]);
      } catch (const std::exception& e) {
        throw EvaluationFailure(idx, e.what());
      } catch (...) {
        throw EvaluationFailure(idx, "unknown error");
      }
    }
  }

  for (std::size_t idx : pending) {
    strategies[idx].evaluation = results[idx];
    strategies[idx].objective = results[idx]->objective;
    strategies[idx].rank.reset();
  }
  return pending.size();
}

OptimizationResult run_genetic_search(const SearchSpace& space, const GAParams& params,
                                      const GeneEvaluator& evaluator) {
  params.validate();
  const auto t0 = Clock::now();
  GaRng rng(derive_seed(params.seed, 0x6761));
  OptimizationResult result;
  const std::size_t n = params.population_size;

  auto count = [&](const Population& pop, std::size_t from) {
    for (std::size_t i = from; i < pop.size(); ++i) {
      ++result.evaluations;
      const auto& ev = pop[i].evaluation;
      if (ev && ev->consistency && ev->consistency->converged) ++result.converged_evaluations;
    }
  };
  auto evaluate = [&](Population& pop) {
    try {
      evaluate_batch(pop, params.batch_size, params.jobs, evaluator, space.feasible);
    } catch (const EvaluationFailure& e) {
      throw OptimizerAborted(e.what(), result.trace);
    }
  };

  result.generation_starts.push_back(seconds_since(t0));
  Population pop = space.initialize(params, rng);
  for (auto& ind : pop) ind.reset();
  evaluate(pop);
  count(pop, 0);
  pop = rank_and_truncate(std::move(pop), n);
  result.trace.push_back(summarize(pop, 1, seconds_since(t0)));

  for (std::size_t g = 2; g <= params.max_generations; ++g) {
    const double started = seconds_since(t0);
    if (started > params.time_budget) break;
    result.generation_starts.push_back(started);

    Population children;
    children.reserve(n);
    while (children.size() < n) {
      const auto& a = pop[tournament_select(pop, rng)];
      const auto& b = pop[tournament_select(pop, rng)];
      auto [c1, c2] = sbx_crossover(a, b, params.sbx_eta, params.crossover_probability,
                                    space.lower, space.upper, rng);
      for (Individual* c : {&c1, &c2}) {
        Individual m = polynomial_mutation(*c, params.mutation_eta, params.mutation_probability,
                                           space.lower, space.upper, rng);
        m.genes = space.repair(m.genes);
        m.reset();
        children.push_back(std::move(m));
      }
    }
    evaluate(children);
    count(children, 0);

    Population mixed = std::move(pop);
    for (auto& c : children) mixed.push_back(std::move(c));
    pop = rank_and_truncate(std::move(mixed), n);
    result.trace.push_back(summarize(pop, g, seconds_since(t0)));
  }

  const Individual& best = pop.front();
  result.best_genes = best.genes;
  result.best_objective = *best.objective;
  result.best_evaluation = best.evaluation;
  result.population = std::move(pop);
  return result;
}

OptimizationResult optimize(const DtopConstraints& constraints, const GAParams& params,
                            double start, double interval, const ScheduleEvaluator& evaluator) {
  constraints.validate();
  const TollBounds box = reachable_box(constraints);
  SearchSpace space;
  space.lower = box.lower;
  space.upper = box.upper;
  space.repair = [&](std::span<const double> g) { return clamp_to_constraints(g, constraints); };
  space.feasible = [&](std::span<const double> g) { return satisfies_constraints(g, constraints); };
  space.initialize = [&](const GAParams& p, GaRng& rng) { return init_population(p, constraints, rng); };

  auto genes_eval = [&](std::span<const double> g) {
    return evaluator(expand_schedule(g, constraints, start, interval));
  };
  OptimizationResult result = run_genetic_search(space, params, genes_eval);
  result.schedule = expand_schedule(result.best_genes, constraints, start, interval);
  return result;
}

OptimizationResult optimize_static(const TollBounds& bounds, const GAParams& params,
                                   const std::function<Evaluation(const std::vector<double>&)>& evaluator) {
  const std::size_t m = bounds.lower.size();
  if (bounds.upper.size() != m) throw InfeasibleConstraints("bounds differ in length");
  for (std::size_t i = 0; i < m; ++i)
    if (!(bounds.lower[i] <= bounds.upper[i]))
      throw InfeasibleConstraints(fmt::format("gantry {}: lower bound above upper bound", i));

  SearchSpace space;
  space.lower = bounds.lower;
  space.upper = bounds.upper;
  space.repair = [&](std::span<const double> g) {
    std::vector<double> out(g.begin(), g.end());
    for (std::size_t i = 0; i < m; ++i) out[i] = std::clamp(out[i], bounds.lower[i], bounds.upper[i]);
    return out;
  };
  space.feasible = [&](std::span<const double> g) {
    if (g.size() != m) return false;
    for (std::size_t i = 0; i < m; ++i)
      if (!(g[i] >= bounds.lower[i] && g[i] <= bounds.upper[i])) return false;
    return true;
  };
  space.initialize = [&](const GAParams& p, GaRng& rng) {
    Population pop(p.population_size);
    for (auto& ind : pop) {
      ind.genes.resize(m);
      for (std::size_t i = 0; i < m; ++i) ind.genes[i] = uniform_in(rng, bounds.lower[i], bounds.upper[i]);
    }
    return pop;
  };
  auto genes_eval = [&](std::span<const double> g) {
    return evaluator(std::vector<double>(g.begin(), g.end()));
  };
  OptimizationResult result = run_genetic_search(space, params, genes_eval);
  result.schedule = TollSchedule(0.0, 1.0, {result.best_genes}, true);
  return result;
}

GridResult grid_search(std::span<const double> lower, std::span<const double> upper,
                       std::size_t levels, const GeneEvaluator& evaluator, std::size_t jobs,
                       std::size_t max_evaluations) {
  const std::size_t dims = lower.size();
  if (upper.size() != dims) throw std::invalid_argument("grid bounds differ in length");
  if (dims == 0) throw std::invalid_argument("grid needs at least one dimension");
  if (levels < 1) throw std::invalid_argument("grid needs at least one level");
  std::size_t total = 1;
  for (std::size_t d = 0; d < dims; ++d) {
    if (total > max_evaluations / levels)
      throw GridTooLarge(fmt::format("grid exceeds {} evaluations", max_evaluations));
    total *= levels;
  }

  auto value = [&](std::size_t d, std::size_t k) {
    if (levels == 1) return lower[d];
    if (k + 1 == levels) return upper[d];
    return lower[d] + (upper[d] - lower[d]) * static_cast<double>(k) / static_cast<double>(levels - 1);
  };
  Population points(total);
  for (std::size_t r = 0; r < total; ++r) {
    auto& genes = points[r].genes;
    genes.resize(dims);
    std::size_t rest = r;
    for (std::size_t d = dims; d-- > 0;) {
      genes[d] = value(d, rest % levels);
      rest /= levels;
    }
  }
  evaluate_batch(points, total, jobs, evaluator);

  GridResult out;
  out.rows.reserve(total);
  for (std::size_t r = 0; r < total; ++r) {
    out.rows.push_back({points[r].genes, *points[r].objective});
    if (out.rows[r].objective < out.rows[out.argmin].objective) out.argmin = r;
  }
  return out;
}

}  // namespace tollopt
