#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tollopt/guidance.hpp"
#include "tollopt/prediction.hpp"
#include "tollopt/toll_schedule.hpp"

namespace tollopt {

using GaRng = std::mt19937_64;

struct GAParams {
  std::size_t population_size = 60;  // N, even
  double crossover_probability = 0.7;
  double mutation_probability = 0.1;
  double sbx_eta = 15.0;
  double mutation_eta = 20.0;
  std::size_t max_generations = 10;  // counts the initial population
  double time_budget = 300.0;        // seconds
  std::size_t batch_size = 60;       // evaluations joined per barrier
  std::size_t jobs = 1;              // concurrent evaluations inside a batch
  std::uint64_t seed = 1;

  void validate() const;
};

struct TollBounds {
  std::vector<double> lower;
  std::vector<double> upper;

  static TollBounds uniform(std::size_t gantries, double lower, double upper) {
    return {std::vector<double>(gantries, lower), std::vector<double>(gantries, upper)};
  }
};

/// Feasible region of the toll decision vector for one prediction horizon.
/// The first interval's tolls are fixed to lambda; the genes hold the
/// remaining H-1 rows (row-major), or a single repeated row when reduced.
struct DtopConstraints {
  std::vector<double> lambda;
  std::vector<double> delta;
  TollBounds bounds;
  std::size_t horizon = 3;
  bool reduced = true;

  std::size_t gantries() const { return lambda.size(); }
  std::size_t gene_count() const { return reduced ? gantries() : gantries() * (horizon - 1); }
  void validate() const;
};

class InfeasibleConstraints : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Sequential projection: the first optimized row into the tube around
/// lambda intersected with the box, then every later row into the tube
/// around the repaired row before it.
std::vector<double> clamp_to_constraints(std::span<const double> genes, const DtopConstraints& c);

/// Exact check of box bounds and delta tubes, written in the same form the
/// projection produces (no tolerance).
bool satisfies_constraints(std::span<const double> genes, const DtopConstraints& c);

/// Smallest per-gene box containing every feasible decision vector.
TollBounds reachable_box(const DtopConstraints& c);

/// Complete schedule (lambda first) on the grid [start, start + H*interval).
TollSchedule expand_schedule(std::span<const double> genes, const DtopConstraints& c, double start,
                             double interval);

struct Evaluation {
  double objective = 0.0;
  std::optional<GuidanceTable> guidance;
  std::optional<ConsistencyReport> consistency;
};

struct Individual {
  std::vector<double> genes;
  std::optional<double> objective;
  std::optional<std::size_t> rank;
  std::shared_ptr<const Evaluation> evaluation;

  void reset() {
    objective.reset();
    rank.reset();
    evaluation.reset();
  }
};

using Population = std::vector<Individual>;
using GeneEvaluator = std::function<Evaluation(std::span<const double> genes)>;
using ScheduleEvaluator = std::function<Evaluation(const TollSchedule& schedule)>;

struct TraceRow {
  std::size_t generation = 0;
  double best = 0.0;
  double mean = 0.0;
  double elapsed = 0.0;  // seconds since the optimizer started
};

struct OptimizationResult {
  std::vector<double> best_genes;
  double best_objective = 0.0;
  std::shared_ptr<const Evaluation> best_evaluation;
  TollSchedule schedule;
  std::vector<TraceRow> trace;
  std::vector<double> generation_starts;  // elapsed seconds when each generation began
  std::size_t evaluations = 0;
  std::size_t converged_evaluations = 0;
  Population population;
};

class EvaluationFailure : public std::runtime_error {
 public:
  EvaluationFailure(std::size_t index, const std::string& what);
  std::size_t index() const { return index_; }

 private:
  std::size_t index_;
};

class OptimizerAborted : public std::runtime_error {
 public:
  OptimizerAborted(const std::string& what, std::vector<TraceRow> trace)
      : std::runtime_error(what), trace_(std::move(trace)) {}
  const std::vector<TraceRow>& trace() const { return trace_; }

 private:
  std::vector<TraceRow> trace_;
};

/// Feasible decision vectors sampled uniformly inside the chained tubes.
Population init_population(const GAParams& params, const DtopConstraints& c, GaRng& rng);

/// Bounded simulated binary crossover. With probability
/// `crossover_probability` each gene is recombined with probability 1/2;
/// otherwise the children are copies of the parents.
std::pair<Individual, Individual> sbx_crossover(const Individual& p1, const Individual& p2,
                                                double eta_c, double crossover_probability,
                                                std::span<const double> lower,
                                                std::span<const double> upper, GaRng& rng);

/// Bounded polynomial mutation; each gene mutates with probability p_m.
Individual polynomial_mutation(const Individual& ind, double eta_m, double p_m,
                               std::span<const double> lower, std::span<const double> upper,
                               GaRng& rng);

/// Binary tournament with replacement; lower rank wins, ties go to the lower index.
std::size_t tournament_select(const Population& population, GaRng& rng);

/// Stable ascending sort by objective, keep the first n, ranks 1..n.
Population rank_and_truncate(Population mixed, std::size_t n);

/// Evaluates every unevaluated individual. Batches of `batch_size` run with
/// up to `jobs` threads and join before the next batch starts. When
/// `feasible` is given, an infeasible individual is a logic error.
std::size_t evaluate_batch(Population& strategies, std::size_t batch_size, std::size_t jobs,
                           const GeneEvaluator& evaluator,
                           const std::function<bool(std::span<const double>)>& feasible = {});

/// Search space for the generic real-coded GA.
struct SearchSpace {
  std::vector<double> lower;
  std::vector<double> upper;
  std::function<std::vector<double>(std::span<const double>)> repair;
  std::function<bool(std::span<const double>)> feasible;
  std::function<Population(const GAParams&, GaRng&)> initialize;
};

/// Elitist real-coded GA: evaluate N, then per generation tournament + SBX +
/// polynomial mutation, evaluate children, keep the best N of the 2N.
/// Stops after max_generations or once time_budget has elapsed.
OptimizationResult run_genetic_search(const SearchSpace& space, const GAParams& params,
                                      const GeneEvaluator& evaluator);

/// Dynamic toll optimization over one prediction horizon. The returned
/// schedule starts with lambda; its guidance is the best individual's.
OptimizationResult optimize(const DtopConstraints& constraints, const GAParams& params,
                            double start, double interval, const ScheduleEvaluator& evaluator);

/// One toll vector applied across the whole tolling period; box bounds only.
OptimizationResult optimize_static(const TollBounds& bounds, const GAParams& params,
                                   const std::function<Evaluation(const std::vector<double>&)>& evaluator);

struct GridRow {
  std::vector<double> genes;
  double objective = 0.0;
};

struct GridResult {
  std::vector<GridRow> rows;
  std::size_t argmin = 0;
};

class GridTooLarge : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Exhaustive evaluation of `levels` evenly spaced values per dimension.
/// Rows are ordered with the first dimension varying slowest; argmin is the
/// first row attaining the minimum.
GridResult grid_search(std::span<const double> lower, std::span<const double> upper,
                       std::size_t levels, const GeneEvaluator& evaluator, std::size_t jobs = 1,
                       std::size_t max_evaluations = 10000);

}  // namespace tollopt
