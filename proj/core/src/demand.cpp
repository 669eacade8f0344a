#include "tollopt/demand.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <string>
#include <utility>

#include <fmt/format.h>

#include "tollopt/rng.hpp"
#include "text.hpp"

namespace tollopt {

ODDemand::ODDemand(double start, double interval_width, std::size_t intervals)
    : start_(start), width_(interval_width), intervals_(intervals) {
  if (!(interval_width > 0.0)) throw DemandError("demand interval width must be positive");
}

std::size_t ODDemand::add_pair(const OdPair& od) {
  if (const auto existing = find_pair(od)) return *existing;
  pairs_.push_back(od);
  rates_.emplace_back(intervals_, 0.0);
  return pairs_.size() - 1;
}

std::optional<std::size_t> ODDemand::find_pair(const OdPair& od) const {
  const auto it = std::find(pairs_.begin(), pairs_.end(), od);
  if (it == pairs_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - pairs_.begin());
}

void ODDemand::set_rate(std::size_t od, std::size_t interval, double rate) {
  if (!(rate >= 0.0)) throw DemandError(fmt::format("negative demand rate {}", rate));
  rates_.at(od).at(interval) = rate;
}

TimeWindow ODDemand::interval_window(std::size_t interval) const {
  const double begin = start_ + width_ * static_cast<double>(interval);
  return {begin, begin + width_};
}

ODDemand ODDemand::scaled(double factor) const {
  ODDemand out = *this;
  for (auto& row : out.rates_) {
    for (auto& r : row) r *= factor;
  }
  return out;
}

double ODDemand::total() const {
  double sum = 0.0;
  for (const auto& row : rates_) {
    for (const double r : row) sum += r;
  }
  return sum;
}

ODDemand perturb(const ODDemand& demand, double cov, std::uint64_t seed) {
  if (cov < 0.0) throw DemandError("coefficient of variation must be non-negative");
  ODDemand out = demand;
  if (cov == 0.0) return out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t od = 0; od < demand.pair_count(); ++od) {
    for (std::size_t i = 0; i < demand.interval_count(); ++i) {
      // One draw per cell regardless of the mean so streams stay aligned
      // across demand levels.
      const double z = normal(rng);
      const double mean = demand.rate(od, i);
      out.set_rate(od, i, std::max(0.0, mean + cov * mean * z));
    }
  }
  return out;
}

std::vector<TripRecord> generate_trips(const ODDemand& demand, double informed_fraction,
                                       std::uint64_t seed, std::optional<TimeWindow> window,
                                       VehicleId first_id) {
  if (informed_fraction < 0.0 || informed_fraction > 1.0)
    throw DemandError("informed fraction must lie in [0, 1]");

  std::vector<TripRecord> trips;
  for (std::size_t od = 0; od < demand.pair_count(); ++od) {
    for (std::size_t i = 0; i < demand.interval_count(); ++i) {
      TimeWindow cell = demand.interval_window(i);
      double rate = demand.rate(od, i);
      if (window) {
        const TimeWindow overlap{std::max(cell.begin, window->begin), std::min(cell.end, window->end)};
        if (!(overlap.end > overlap.begin)) continue;
        rate *= overlap.length() / cell.length();
        cell = overlap;
      }
      // Each cell gets its own stream so windowed and full realizations of
      // the same cell agree on the draw structure.
      std::mt19937_64 rng(derive_seed(seed, od, i));
      if (rate <= 0.0) continue;
      std::poisson_distribution<std::int64_t> poisson(rate);
      const auto count = poisson(rng);
      for (std::int64_t k = 0; k < count; ++k) {
        TripRecord trip;
        trip.od = demand.pairs()[od];
        trip.departure_time = cell.begin + uniform01(rng) * cell.length();
        trip.informed = uniform01(rng) < informed_fraction;
        trips.push_back(trip);
      }
    }
  }
  std::stable_sort(trips.begin(), trips.end(), [](const TripRecord& a, const TripRecord& b) {
    return a.departure_time < b.departure_time;
  });
  for (auto& trip : trips) trip.vehicle = first_id++;
  return trips;
}

ODDemand load_demand(const std::filesystem::path& path, double start, double interval_width,
                     std::size_t intervals) {
  std::ifstream in(path);
  if (!in) throw DemandError(fmt::format("cannot open demand file {}", path.string()));

  struct Row {
    OdPair od;
    std::size_t interval;
    double rate;
  };
  std::vector<Row> rows;
  std::string raw;
  std::size_t line_no = 0;
  bool first_line = true;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = text::strip_comment(raw);
    if (line.empty()) continue;
    const bool header_allowed = std::exchange(first_line, false);
    const auto f = text::split(line, ',');
    std::optional<NodeId> o, d;
    std::optional<std::size_t> i;
    std::optional<double> r;
    if (f.size() == 4) {
      o = text::parse_number<NodeId>(f[0]);
      d = text::parse_number<NodeId>(f[1]);
      i = text::parse_number<std::size_t>(f[2]);
      r = text::parse_number<double>(f[3]);
    }
    if (!o || !d || !i || !r) {
      if (header_allowed) continue;
      throw DemandError(fmt::format("{}:{}: expected origin,destination,interval,rate",
                                    path.string(), line_no));
    }
    if (*r < 0.0) throw DemandError(fmt::format("{}:{}: negative rate", path.string(), line_no));
    rows.push_back({{*o, *d}, *i, *r});
  }

  for (const auto& row : rows) intervals = std::max(intervals, row.interval + 1);
  ODDemand demand(start, interval_width, intervals);
  for (const auto& row : rows) {
    const auto od = demand.add_pair(row.od);
    demand.set_rate(od, row.interval, demand.rate(od, row.interval) + row.rate);
  }
  return demand;
}

}  // namespace tollopt
