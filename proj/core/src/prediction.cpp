#include "tollopt/prediction.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace tollopt {

GuidanceTable msa_update(const GuidanceTable& guidance, const GuidanceTable& predicted,
                         std::size_t n, const Network& network) {
  if (n < 1) throw std::invalid_argument("MSA iteration index starts at 1");
  if (!guidance.same_shape(predicted)) throw GuidanceError("MSA update on mismatched grids");
  if (guidance.link_count() != network.link_count()) throw GuidanceError("guidance does not match network");
  const double step = 1.0 / static_cast<double>(n + 1);
  GuidanceTable out = guidance;
  for (LinkIndex l = 0; l < guidance.link_count(); ++l) {
    const double fft = network.link(l).free_flow_time;
    for (std::size_t i = 0; i < guidance.interval_count(); ++i) {
      const double g = guidance.at(l, i);
      out.set(l, i, std::max(fft, g + step * (predicted.at(l, i) - g)));
    }
  }
  return out;
}

double consistency_gap(const GuidanceTable& guidance, const SimulationResult& result, double floor) {
  const auto& predicted = result.link_times;
  if (!guidance.same_shape(predicted)) throw GuidanceError("gap on mismatched grids");
  double gap = 0.0;
  for (LinkIndex l = 0; l < guidance.link_count(); ++l) {
    for (std::size_t i = 0; i < guidance.interval_count(); ++i) {
      if (result.link_counts[l][i] == 0) continue;
      const double p = predicted.at(l, i);
      gap = std::max(gap, std::abs(guidance.at(l, i) - p) / std::max(p, floor));
    }
  }
  return gap;
}

double objective(const SimulationResult& result) {
  double total = 0.0;
  for (const auto& trip : result.completed) total += trip.experienced_tt.value_or(0.0);
  for (const auto& trip : result.unfinished) total += trip.accrued;
  return total;
}

Prediction predict_consistent(const NetworkState& estimated, std::span<const TripRecord> trips,
                              const TollSchedule& tolls, const GuidanceTable& initial,
                              const ConsistencySettings& settings, std::uint64_t seed,
                              const SupplyContext& context) {
  if (!(settings.eps > 0.0)) throw std::invalid_argument("consistency tolerance must be positive");
  if (settings.max_iter < 1) throw std::invalid_argument("max_iter must be at least 1");
  if (std::abs(initial.start() - estimated.clock()) > 1e-9)
    throw GuidanceError(fmt::format("initial guidance starts at {} but the state clock is {}",
                                    initial.start(), estimated.clock()));

  GuidanceTable guidance = initial;
  for (std::size_t n = 1;; ++n) {
    NetworkState state = clone_state(estimated);
    SimulationResult result = simulate(state, trips, guidance, tolls, initial.end(), seed, context);
    const double gap = consistency_gap(guidance, result, settings.gap_floor);
    if (gap <= settings.eps || n == settings.max_iter) {
      return {std::move(guidance), std::move(result), {n, gap, gap <= settings.eps}};
    }
    guidance = msa_update(guidance, result.link_times, n, *context.network);
  }
}

}  // namespace tollopt
