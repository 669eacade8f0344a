#include "tollopt/guidance.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <string>

#include <fmt/format.h>

#include "text.hpp"

namespace tollopt {

GuidanceTable::GuidanceTable(double start, double interval, std::size_t intervals,
                             std::size_t links, double fill)
    : start_(start), interval_(interval), intervals_(intervals), links_(links),
      values_(intervals * links, fill) {
  if (!(interval > 0.0)) throw GuidanceError("guidance interval must be positive");
}

GuidanceTable GuidanceTable::free_flow(const Network& network, double start, double interval,
                                       std::size_t intervals) {
  GuidanceTable table(start, interval, intervals, network.link_count());
  for (LinkIndex l = 0; l < network.link_count(); ++l) {
    for (std::size_t i = 0; i < intervals; ++i) table.set(l, i, network.link(l).free_flow_time);
  }
  return table;
}

double GuidanceTable::at(LinkIndex link, std::size_t interval) const {
  if (link >= links_ || interval >= intervals_)
    throw GuidanceError(fmt::format("missing guidance entry for link index {} interval {}", link, interval));
  return values_[link * intervals_ + interval];
}

void GuidanceTable::set(LinkIndex link, std::size_t interval, double seconds) {
  if (link >= links_ || interval >= intervals_)
    throw GuidanceError(fmt::format("guidance cell ({}, {}) out of range", link, interval));
  values_[link * intervals_ + interval] = seconds;
}

std::size_t GuidanceTable::interval_of(double time) const {
  if (intervals_ == 0) throw GuidanceError("empty guidance table");
  // Half a microsecond of slack absorbs accumulated rounding at the boundary.
  if (time < start_ - 5e-7)
    throw GuidanceError(fmt::format("missing guidance entry: time {} precedes table start {}", time, start_));
  const double offset = std::floor((time - start_) / interval_);
  if (offset <= 0.0) return 0;
  return std::min(static_cast<std::size_t>(offset), intervals_ - 1);
}

double GuidanceTable::lookup(LinkIndex link, double time) const { return at(link, interval_of(time)); }

bool GuidanceTable::same_shape(const GuidanceTable& other) const {
  return start_ == other.start_ && interval_ == other.interval_ &&
         intervals_ == other.intervals_ && links_ == other.links_;
}

GuidanceTable GuidanceTable::slice(double from, std::size_t intervals) const {
  GuidanceTable out(from, interval_, intervals, links_);
  for (LinkIndex l = 0; l < links_; ++l) {
    for (std::size_t i = 0; i < intervals; ++i) {
      const double mid = from + (static_cast<double>(i) + 0.5) * interval_;
      out.set(l, i, lookup(l, mid));
    }
  }
  return out;
}

void GuidanceTable::overwrite(const GuidanceTable& newer) {
  if (newer.links_ != links_) throw GuidanceError("guidance link count mismatch");
  for (std::size_t i = 0; i < newer.intervals_; ++i) {
    const double mid = newer.start_ + (static_cast<double>(i) + 0.5) * newer.interval_;
    if (mid < start_ || mid >= end()) continue;
    const auto target = interval_of(mid);
    for (LinkIndex l = 0; l < links_; ++l) set(l, target, newer.at(l, i));
  }
}

void write_guidance(std::ostream& out, const GuidanceTable& table, const Network& network) {
  out << "link,interval,seconds\n";
  for (LinkIndex l = 0; l < table.link_count(); ++l) {
    for (std::size_t i = 0; i < table.interval_count(); ++i) {
      out << fmt::format("{},{},{}\n", network.link(l).id, i, table.at(l, i));
    }
  }
}

GuidanceTable load_guidance(const std::filesystem::path& path, const Network& network,
                            double start, double interval, std::size_t intervals) {
  std::ifstream in(path);
  if (!in) throw GuidanceError(fmt::format("cannot open travel-time file {}", path.string()));
  auto table = GuidanceTable::free_flow(network, start, interval, intervals);
  std::string raw;
  std::size_t line_no = 0;
  bool first_line = true;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = text::strip_comment(raw);
    if (line.empty()) continue;
    const bool header_allowed = std::exchange(first_line, false);
    const auto f = text::split(line, ',');
    std::optional<LinkId> id;
    std::optional<std::size_t> i;
    std::optional<double> seconds;
    if (f.size() == 3) {
      id = text::parse_number<LinkId>(f[0]);
      i = text::parse_number<std::size_t>(f[1]);
      seconds = text::parse_number<double>(f[2]);
    }
    if (!id || !i || !seconds) {
      if (header_allowed) continue;
      throw GuidanceError(fmt::format("{}:{}: expected link,interval,seconds", path.string(), line_no));
    }
    const auto link = network.index_of(*id);
    if (!link) throw GuidanceError(fmt::format("{}:{}: unknown link {}", path.string(), line_no, *id));
    if (*i >= intervals) continue;
    table.set(*link, *i, std::max(*seconds, network.link(*link).free_flow_time));
  }
  return table;
}

}  // namespace tollopt
