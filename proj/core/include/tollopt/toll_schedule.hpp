#pragma once

#include <optional>
#include <vector>

#include "tollopt/demand.hpp"

namespace tollopt {

/// Toll matrix: one row per tolling interval, one column per gantry.
/// Row h covers [start + h*interval, start + (h+1)*interval). Outside the
/// optional active window every toll reads as zero.
class TollSchedule {
 public:
  TollSchedule() = default;
  TollSchedule(double start, double interval, std::vector<std::vector<double>> rows,
               bool reduced = false);

  static TollSchedule zeros(std::size_t gantries, double start, double interval,
                            std::size_t intervals);
  static TollSchedule constant(const std::vector<double>& tolls, double start, double interval,
                               std::size_t intervals);

  /// Toll on gantry `gantry` for a vehicle entering at `time`. Before the
  /// first row the first row applies; after the last row the last row holds.
  double toll(std::size_t gantry, double time) const;

  TollSchedule& set_active_window(std::optional<TimeWindow> window) {
    active_ = window;
    return *this;
  }
  const std::optional<TimeWindow>& active_window() const { return active_; }

  const std::vector<std::vector<double>>& rows() const { return rows_; }
  const std::vector<double>& row(std::size_t h) const { return rows_.at(h); }
  std::size_t interval_count() const { return rows_.size(); }
  std::size_t gantry_count() const { return rows_.empty() ? 0 : rows_.front().size(); }
  double start() const { return start_; }
  double interval() const { return interval_; }
  bool reduced() const { return reduced_; }

  bool operator==(const TollSchedule&) const = default;

 private:
  double start_ = 0.0;
  double interval_ = 300.0;
  std::vector<std::vector<double>> rows_;
  bool reduced_ = false;
  std::optional<TimeWindow> active_;
};

}  // namespace tollopt
