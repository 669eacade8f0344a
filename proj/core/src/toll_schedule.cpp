#include "tollopt/toll_schedule.hpp"

#include <cmath>
#include <stdexcept>

namespace tollopt {

TollSchedule::TollSchedule(double start, double interval, std::vector<std::vector<double>> rows,
                           bool reduced)
    : start_(start), interval_(interval), rows_(std::move(rows)), reduced_(reduced) {
  if (!(interval > 0.0)) throw std::invalid_argument("toll interval must be positive");
  for (const auto& r : rows_) {
    if (r.size() != rows_.front().size()) throw std::invalid_argument("ragged toll schedule");
  }
}

TollSchedule TollSchedule::zeros(std::size_t gantries, double start, double interval,
                                 std::size_t intervals) {
  return TollSchedule(start, interval,
                      std::vector<std::vector<double>>(intervals, std::vector<double>(gantries, 0.0)));
}

TollSchedule TollSchedule::constant(const std::vector<double>& tolls, double start, double interval,
                                    std::size_t intervals) {
  return TollSchedule(start, interval, std::vector<std::vector<double>>(intervals, tolls));
}

double TollSchedule::toll(std::size_t gantry, double time) const {
  if (rows_.empty()) return 0.0;
  if (active_ && !active_->contains(time)) return 0.0;
  const double offset = std::floor((time - start_) / interval_);
  std::size_t h = 0;
  if (offset > 0.0) h = std::min(static_cast<std::size_t>(offset), rows_.size() - 1);
  return rows_[h].at(gantry);
}

}  // namespace tollopt
