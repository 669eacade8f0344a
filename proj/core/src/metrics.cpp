#include "tollopt/metrics.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include <boost/math/distributions/students_t.hpp>
#include <fmt/format.h>

namespace tollopt {

double rmsn(std::span<const double> simulated, std::span<const double> observed) {
  if (simulated.size() != observed.size())
    throw MetricError(fmt::format("rmsn: {} simulated vs {} observed values", simulated.size(),
                                  observed.size()));
  double sq = 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double d = simulated[i] - observed[i];
    sq += d * d;
    total += observed[i];
  }
  if (total == 0.0) throw MetricError("rmsn: observed values sum to zero");
  return std::sqrt(static_cast<double>(observed.size()) * sq) / total;
}

SummaryStats SummaryStats::of(std::span<const double> sample) {
  SummaryStats s;
  s.count = sample.size();
  if (s.count == 0) return s;
  double sum = 0.0;
  for (double x : sample) sum += x;
  s.mean = sum / static_cast<double>(s.count);
  if (s.count > 1) {
    double ss = 0.0;
    for (double x : sample) ss += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(s.count - 1));
  }
  return s;
}

SummaryStats SummaryStats::merged(const SummaryStats& other) const {
  if (count == 0) return other;
  if (other.count == 0) return *this;
  const double n1 = static_cast<double>(count);
  const double n2 = static_cast<double>(other.count);
  SummaryStats out;
  out.count = count + other.count;
  const double n = n1 + n2;
  out.mean = (n1 * mean + n2 * other.mean) / n;
  const double ss = (n1 - 1.0) * sd * sd + (n2 - 1.0) * other.sd * other.sd +
                    n1 * (mean - out.mean) * (mean - out.mean) +
                    n2 * (other.mean - out.mean) * (other.mean - out.mean);
  out.sd = out.count > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  return out;
}

TTestResult two_sided_t_test(const SummaryStats& a, const SummaryStats& b, double confidence) {
  if (a.count < 2 || b.count < 2)
    throw MetricError("t-test needs at least two observations per sample");
  if (!(confidence > 0.0 && confidence < 1.0)) throw MetricError("confidence must lie in (0, 1)");
  const double va = a.sd * a.sd / static_cast<double>(a.count);
  const double vb = b.sd * b.sd / static_cast<double>(b.count);
  const double diff = b.mean - a.mean;
  TTestResult r;
  if (va + vb == 0.0) {
    if (diff == 0.0) return r;
    r.t = std::copysign(std::numeric_limits<double>::infinity(), diff);
    r.df = static_cast<double>(a.count + b.count - 2);
    r.p = 0.0;
    r.significant = true;
    return r;
  }
  r.t = diff / std::sqrt(va + vb);
  r.df = (va + vb) * (va + vb) /
         (va * va / static_cast<double>(a.count - 1) + vb * vb / static_cast<double>(b.count - 1));
  const boost::math::students_t dist(r.df);
  r.p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t)));
  r.significant = r.p < 1.0 - confidence;
  return r;
}

TTestResult two_sided_t_test(std::span<const double> a, std::span<const double> b, double confidence) {
  return two_sided_t_test(SummaryStats::of(a), SummaryStats::of(b), confidence);
}

double improvement_pct(double baseline_mean, double treatment_mean) {
  if (!(baseline_mean > 0.0)) throw MetricError("baseline mean must be positive");
  return 100.0 * (baseline_mean - treatment_mean) / baseline_mean;
}

std::map<std::int64_t, SummaryStats> avg_travel_time_by_departure(std::span<const TripRecord> trips,
                                                                 double width, double origin) {
  if (!(width > 0.0)) throw MetricError("interval width must be positive");
  std::map<std::int64_t, std::vector<double>> groups;
  for (const auto& trip : trips) {
    if (!trip.experienced_tt) continue;
    const auto k = static_cast<std::int64_t>(std::floor((trip.departure_time - origin) / width));
    groups[k].push_back(*trip.experienced_tt);
  }
  std::map<std::int64_t, SummaryStats> out;
  for (const auto& [k, v] : groups) out.emplace(k, SummaryStats::of(v));
  return out;
}

}  // namespace tollopt
