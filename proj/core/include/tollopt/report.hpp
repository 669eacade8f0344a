#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "tollopt/closed_loop.hpp"

namespace tollopt {

class ReportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// vehicle,od,departure,path,travel_time (blank travel time for stranded trips)
void write_trips_csv(std::ostream& out, const std::vector<TripRecord>& trips);
void write_cycles_csv(std::ostream& out, const std::vector<CycleRecord>& cycles);
void write_trace_csv(std::ostream& out, const std::vector<CycleRecord>& cycles);
void write_series_csv(std::ostream& out, const std::vector<SeriesRow>& rows);
std::vector<SeriesRow> read_series_csv(std::istream& in);
std::vector<SeriesRow> load_series_csv(const std::filesystem::path& path);

struct WindowComparison {
  std::string window;
  SummaryStats baseline;   // pooled over vehicles
  SummaryStats treatment;
  double improvement_pct = 0.0;
  std::size_t intervals = 0;  // departure intervals entering the t-test
  TTestResult test;
};

/// Improvement of `treatment` over `baseline` for the tolling phase and the
/// peak window. The percentage uses vehicle-weighted means; the t-test runs
/// on the departure-interval means of intervals where both series have trips.
/// Both series must cover the same intervals.
std::vector<WindowComparison> compare_series(const std::vector<SeriesRow>& baseline,
                                             const std::vector<SeriesRow>& treatment, TimeWindow peak);

struct Comparison {
  double level = 1.0;
  Scenario treatment = Scenario::Predictive;
  Scenario baseline = Scenario::NoToll;
  double tolling_pct = 0.0;
  TTestResult tolling;
  double peak_pct = 0.0;
  TTestResult peak;
  std::size_t drivers = 0;  // treatment trips departing in the tolling window
};

/// compare_series() over the aggregated departure series of two runs.
Comparison compare_runs(const ScenarioRun& baseline, const ScenarioRun& treatment, const Config& config);
void write_comparisons_csv(std::ostream& out, const std::vector<Comparison>& rows);
void write_window_comparisons_csv(std::ostream& out, const std::vector<WindowComparison>& rows);

}  // namespace tollopt
