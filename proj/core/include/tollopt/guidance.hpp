#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <vector>

#include "tollopt/demand.hpp"
#include "tollopt/network.hpp"

namespace tollopt {

class GuidanceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Time-dependent link travel times, seconds: one value per (link, interval)
/// on a uniform grid. Used both for disseminated guidance and for the
/// per-interval link times a simulation produces.
class GuidanceTable {
 public:
  GuidanceTable() = default;
  GuidanceTable(double start, double interval, std::size_t intervals, std::size_t links,
                double fill = 0.0);

  static GuidanceTable free_flow(const Network& network, double start, double interval,
                                 std::size_t intervals);

  double at(LinkIndex link, std::size_t interval) const;
  void set(LinkIndex link, std::size_t interval, double seconds);

  /// Value for the interval containing `time`. Times past the last interval
  /// hold the last value; times before start() are a coverage error.
  double lookup(LinkIndex link, double time) const;
  std::size_t interval_of(double time) const;

  double start() const { return start_; }
  double interval() const { return interval_; }
  std::size_t interval_count() const { return intervals_; }
  std::size_t link_count() const { return links_; }
  double end() const { return start_ + interval_ * static_cast<double>(intervals_); }
  bool same_shape(const GuidanceTable& other) const;

  /// New table on this table's interval width starting at `from`, sampled
  /// from this one via lookup().
  GuidanceTable slice(double from, std::size_t intervals) const;
  /// Copies every cell of `newer` whose interval aligns with one of ours.
  void overwrite(const GuidanceTable& newer);

  const std::vector<double>& values() const { return values_; }
  bool operator==(const GuidanceTable&) const = default;

 private:
  double start_ = 0.0;
  double interval_ = 300.0;
  std::size_t intervals_ = 0;
  std::size_t links_ = 0;
  std::vector<double> values_;  // link-major
};

/// Rows of `link,interval,seconds` (link ids, interval indices).
void write_guidance(std::ostream& out, const GuidanceTable& table, const Network& network);

/// Reads rows of `link,interval,seconds` onto the given grid. Cells absent
/// from the file carry the link's free-flow time.
GuidanceTable load_guidance(const std::filesystem::path& path, const Network& network,
                            double start, double interval, std::size_t intervals);

}  // namespace tollopt
