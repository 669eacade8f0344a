#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>

#include "tollopt/demand.hpp"

namespace tollopt {

class MetricError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// sqrt(n * sum (sim - obs)^2) / sum obs
double rmsn(std::span<const double> simulated, std::span<const double> observed);

/// Count, mean and sample standard deviation.
struct SummaryStats {
  std::size_t count = 0;
  double mean = 0.0;
  double sd = 0.0;

  static SummaryStats of(std::span<const double> sample);
  /// Exact pooled statistics of the union of two samples.
  SummaryStats merged(const SummaryStats& other) const;
};

struct TTestResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
  bool significant = false;
};

/// Welch two-sided t-test of mean(b) - mean(a); significant when p < 1 - confidence.
TTestResult two_sided_t_test(std::span<const double> a, std::span<const double> b,
                             double confidence = 0.95);
TTestResult two_sided_t_test(const SummaryStats& a, const SummaryStats& b,
                             double confidence = 0.95);

/// 100 * (baseline - treatment) / baseline
double improvement_pct(double baseline_mean, double treatment_mean);

/// Experienced travel times of completed trips grouped by departure
/// interval floor((departure - origin) / width). Intervals without trips are
/// absent.
std::map<std::int64_t, SummaryStats> avg_travel_time_by_departure(std::span<const TripRecord> trips,
                                                                 double width, double origin = 0.0);

}  // namespace tollopt
