#include "tollopt/report.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "text.hpp"

namespace tollopt {

using text::parse_number;
using text::split;
using text::trim;

namespace {

constexpr double kTimeEps = 1e-9;

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += fmt::format("{}{}", i ? ";" : "", v[i]);
  return s;
}

template <class T>
std::string optional_value(const std::optional<T>& v) {
  return v ? fmt::format("{}", *v) : std::string();
}

}  // namespace

void write_trips_csv(std::ostream& out, const std::vector<TripRecord>& trips) {
  fmt::print(out, "vehicle,od,departure,path,travel_time\n");
  for (const auto& t : trips)
    fmt::print(out, "{},{}:{},{},{},{}\n", t.vehicle, t.od.origin, t.od.destination, t.departure_time,
               optional_value(t.chosen_path), optional_value(t.experienced_tt));
}

void write_cycles_csv(std::ostream& out, const std::vector<CycleRecord>& cycles) {
  fmt::print(out, "cycle,start,lambda,next_lambda,optimized,aborted,evaluations,converged,best_objective,wall_clock\n");
  for (const auto& c : cycles)
    fmt::print(out, "{},{},{},{},{},{},{},{},{},{:.3f}\n", c.cycle, c.start, join(c.lambda), join(c.next_lambda),
               c.optimized ? 1 : 0, c.aborted ? 1 : 0, c.evaluations, c.converged_evaluations,
               optional_value(c.best_objective), c.wall_clock);
}

void write_trace_csv(std::ostream& out, const std::vector<CycleRecord>& cycles) {
  fmt::print(out, "cycle,generation,best,mean,elapsed\n");
  for (const auto& c : cycles)
    for (const auto& r : c.trace)
      fmt::print(out, "{},{},{},{},{:.3f}\n", c.cycle, r.generation, r.best, r.mean, r.elapsed);
}

void write_series_csv(std::ostream& out, const std::vector<SeriesRow>& rows) {
  fmt::print(out, "interval_start,interval_end,phase,count,mean_tt,sd_tt\n");
  for (const auto& r : rows) {
    if (r.stats.count == 0)
      fmt::print(out, "{},{},{},0,,\n", r.start, r.end, r.phase);
    else
      fmt::print(out, "{},{},{},{},{},{}\n", r.start, r.end, r.phase, r.stats.count, r.stats.mean, r.stats.sd);
  }
}

std::vector<SeriesRow> read_series_csv(std::istream& in) {
  std::vector<SeriesRow> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto body = trim(line);
    if (body.empty()) continue;
    if (lineno == 1 && body.starts_with("interval_start")) continue;
    const auto f = split(body, ',');
    auto bad = [&] { return ReportError(fmt::format("series line {}: malformed row '{}'", lineno, body)); };
    if (f.size() != 6) throw bad();
    SeriesRow r;
    const auto start = parse_number<double>(f[0]);
    const auto end = parse_number<double>(f[1]);
    const auto count = parse_number<std::size_t>(f[3]);
    if (!start || !end || !count || f[2].empty()) throw bad();
    r.start = *start;
    r.end = *end;
    r.phase = std::string(f[2]);
    r.stats.count = *count;
    if (r.stats.count > 0) {
      const auto mean = parse_number<double>(f[4]);
      const auto sd = parse_number<double>(f[5]);
      if (!mean || !sd) throw bad();
      r.stats.mean = *mean;
      r.stats.sd = *sd;
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<SeriesRow> load_series_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ReportError(fmt::format("cannot open report {}", path.string()));
  try {
    return read_series_csv(in);
  } catch (const ReportError& e) {
    throw ReportError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

void write_comparisons_csv(std::ostream& out, const std::vector<Comparison>& rows) {
  fmt::print(out,
             "level,treatment,baseline,tolling_pct,tolling_t,tolling_p,tolling_sig,peak_pct,peak_t,peak_p,"
             "peak_sig,drivers\n");
  for (const auto& c : rows)
    fmt::print(out, "{},{},{},{:.4f},{:.4f},{:.6g},{},{:.4f},{:.4f},{:.6g},{},{}\n", c.level,
               to_string(c.treatment), to_string(c.baseline), c.tolling_pct, c.tolling.t, c.tolling.p,
               c.tolling.significant ? 1 : 0, c.peak_pct, c.peak.t, c.peak.p, c.peak.significant ? 1 : 0,
               c.drivers);
}

std::vector<WindowComparison> compare_series(const std::vector<SeriesRow>& baseline,
                                             const std::vector<SeriesRow>& treatment, TimeWindow peak) {
  if (baseline.size() != treatment.size())
    throw ReportError(fmt::format("interval mismatch: {} vs {} intervals", baseline.size(), treatment.size()));
  for (std::size_t i = 0; i < baseline.size(); ++i) {
    const auto& a = baseline[i];
    const auto& b = treatment[i];
    if (std::abs(a.start - b.start) > kTimeEps || std::abs(a.end - b.end) > kTimeEps || a.phase != b.phase)
      throw ReportError(fmt::format("interval mismatch at row {}: [{}, {}) vs [{}, {})", i + 1, a.start, a.end,
                                    b.start, b.end));
  }

  auto pooled = [&](const std::string& name, auto&& in_window) {
    WindowComparison w;
    w.window = name;
    bool any = false;
    std::vector<double> a;
    std::vector<double> b;
    for (std::size_t i = 0; i < baseline.size(); ++i) {
      if (!in_window(baseline[i])) continue;
      any = true;
      w.baseline = w.baseline.merged(baseline[i].stats);
      w.treatment = w.treatment.merged(treatment[i].stats);
      if (baseline[i].stats.count > 0 && treatment[i].stats.count > 0) {
        a.push_back(baseline[i].stats.mean);
        b.push_back(treatment[i].stats.mean);
      }
    }
    if (!any) throw ReportError(fmt::format("the {} window covers no reported interval", name));
    if (w.baseline.count > 0 && w.treatment.count > 0 && w.baseline.mean > 0.0)
      w.improvement_pct = improvement_pct(w.baseline.mean, w.treatment.mean);
    w.intervals = a.size();
    if (a.size() >= 2) w.test = two_sided_t_test(a, b);
    return w;
  };

  std::vector<WindowComparison> out;
  out.push_back(pooled("tolling", [](const SeriesRow& r) { return r.phase == "tolling"; }));
  out.push_back(pooled("peak", [&](const SeriesRow& r) {
    return r.start >= peak.begin - kTimeEps && r.end <= peak.end + kTimeEps;
  }));
  return out;
}

void write_window_comparisons_csv(std::ostream& out, const std::vector<WindowComparison>& rows) {
  fmt::print(out, "window,baseline_count,baseline_mean,treatment_count,treatment_mean,improvement_pct,intervals,t,p,significant\n");
  for (const auto& w : rows)
    fmt::print(out, "{},{},{:.4f},{},{:.4f},{:.4f},{},{:.4f},{:.6g},{}\n", w.window, w.baseline.count,
               w.baseline.mean, w.treatment.count, w.treatment.mean, w.improvement_pct, w.intervals, w.test.t, w.test.p,
               w.test.significant ? 1 : 0);
}

Comparison compare_runs(const ScenarioRun& baseline, const ScenarioRun& treatment, const Config& config) {
  const auto windows = compare_series(baseline.series, treatment.series, config.time.peak);
  Comparison c;
  c.level = treatment.level;
  c.treatment = treatment.scenario;
  c.baseline = baseline.scenario;
  c.tolling_pct = windows[0].improvement_pct;
  c.tolling = windows[0].test;
  c.peak_pct = windows[1].improvement_pct;
  c.peak = windows[1].test;
  c.drivers = windows[0].treatment.count;
  return c;
}

}  // namespace tollopt
