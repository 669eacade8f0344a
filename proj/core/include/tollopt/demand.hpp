#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <vector>

#include "tollopt/network.hpp"

namespace tollopt {

using VehicleId = std::uint64_t;

struct OdPair {
  NodeId origin = 0;
  NodeId destination = 0;

  auto operator<=>(const OdPair&) const = default;
};

/// Half-open time window [begin, end), seconds.
struct TimeWindow {
  double begin = 0.0;
  double end = 0.0;

  bool contains(double t) const { return t >= begin && t < end; }
  double length() const { return end - begin; }
  bool operator==(const TimeWindow&) const = default;
};

class DemandError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Expected departures per (OD pair, interval) over uniform, contiguous
/// intervals of width interval_width() starting at start().
class ODDemand {
 public:
  ODDemand() = default;
  ODDemand(double start, double interval_width, std::size_t intervals);

  /// Index of the pair, adding it with zero rates if new.
  std::size_t add_pair(const OdPair& od);
  std::optional<std::size_t> find_pair(const OdPair& od) const;

  void set_rate(std::size_t od, std::size_t interval, double rate);
  double rate(std::size_t od, std::size_t interval) const { return rates_.at(od).at(interval); }

  const std::vector<OdPair>& pairs() const { return pairs_; }
  std::size_t pair_count() const { return pairs_.size(); }
  std::size_t interval_count() const { return intervals_; }
  double start() const { return start_; }
  double interval_width() const { return width_; }
  double end() const { return start_ + width_ * static_cast<double>(intervals_); }
  TimeWindow interval_window(std::size_t interval) const;

  ODDemand scaled(double factor) const;
  double total() const;

  bool operator==(const ODDemand&) const = default;

 private:
  double start_ = 0.0;
  double width_ = 300.0;
  std::size_t intervals_ = 0;
  std::vector<OdPair> pairs_;
  std::vector<std::vector<double>> rates_;
};

struct TripRecord {
  VehicleId vehicle = 0;
  OdPair od;
  double departure_time = 0.0;
  bool informed = true;
  std::optional<std::size_t> chosen_path;
  std::optional<double> experienced_tt;

  bool operator==(const TripRecord&) const = default;
};

/// Independent Normal(rate, cov * rate) draw per cell, truncated at zero.
ODDemand perturb(const ODDemand& demand, double cov, std::uint64_t seed);

/// Poisson departure counts per cell with uniform departure times inside the
/// cell, sorted by departure time. When `window` is given only the overlap of
/// each cell with it is realized (rate scaled by the overlap fraction).
/// Vehicle ids are assigned consecutively from `first_id` in departure order.
std::vector<TripRecord> generate_trips(const ODDemand& demand, double informed_fraction,
                                       std::uint64_t seed,
                                       std::optional<TimeWindow> window = std::nullopt,
                                       VehicleId first_id = 0);

/// Rows of `origin,destination,interval,rate`. The interval count is the
/// larger of `intervals` and the highest index present plus one.
ODDemand load_demand(const std::filesystem::path& path, double start, double interval_width,
                     std::size_t intervals = 0);

}  // namespace tollopt
