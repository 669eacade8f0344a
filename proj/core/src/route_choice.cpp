#include "tollopt/route_choice.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <tuple>
#include <utility>

#include <fmt/format.h>

#include "text.hpp"

namespace tollopt {

namespace {

double free_flow_cost(const Network& network, const Path& path) {
  double cost = 0.0;
  for (const LinkIndex l : path) cost += network.link(l).free_flow_time;
  return cost;
}

/// Dijkstra on free-flow times. Ties resolve toward lower link indices
/// because a predecessor only changes on strict improvement.
std::optional<Path> shortest_path(const Network& network, NodeId origin, NodeId destination,
                                  const std::vector<bool>& banned) {
  std::map<NodeId, double> dist;
  std::map<NodeId, LinkIndex> via;
  using Entry = std::pair<double, NodeId>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> frontier;
  dist[origin] = 0.0;
  frontier.emplace(0.0, origin);
  std::set<NodeId> settled;
  while (!frontier.empty()) {
    const auto [d, node] = frontier.top();
    frontier.pop();
    if (!settled.insert(node).second) continue;
    if (node == destination) break;
    for (const LinkIndex l : network.outgoing(node)) {
      if (banned[l]) continue;
      const auto& link = network.link(l);
      const double next = d + link.free_flow_time;
      const auto it = dist.find(link.to);
      if (it == dist.end() || next < it->second) {
        dist[link.to] = next;
        via[link.to] = l;
        frontier.emplace(next, link.to);
      }
    }
  }
  if (!settled.contains(destination)) return std::nullopt;
  Path path;
  for (NodeId node = destination; node != origin;) {
    const LinkIndex l = via.at(node);
    path.push_back(l);
    node = network.link(l).from;
  }
  std::reverse(path.begin(), path.end());
  return path;
}

}  // namespace

PathSet enumerate_paths(const Network& network, const OdPair& od, std::size_t k_max) {
  if (k_max < 1) throw RouteChoiceError("k_max must be at least 1");
  if (od.origin == od.destination)
    throw RouteChoiceError(fmt::format("origin equals destination ({})", od.origin));
  if (!network.has_node(od.origin) || !network.has_node(od.destination))
    throw RouteChoiceError(fmt::format("OD pair {}->{} references an unknown node", od.origin, od.destination));

  const std::vector<bool> none(network.link_count(), false);
  auto first = shortest_path(network, od.origin, od.destination, none);
  if (!first)
    throw RouteChoiceError(fmt::format("OD pair {}->{} is disconnected", od.origin, od.destination));

  // Search states are ban sets, ordered by (free-flow cost, link sequence, bans) for
  // determinism. A ban set whose path was already emitted is still expanded.
  using Key = std::tuple<double, Path, std::vector<bool>>;
  std::set<Key> candidates;
  std::set<std::vector<bool>> visited{none};
  std::set<Path> emitted;
  candidates.emplace(free_flow_cost(network, *first), *first, none);

  PathSet set;
  set.od = od;
  while (set.paths.size() < k_max && !candidates.empty()) {
    auto node = candidates.extract(candidates.begin());
    const auto& [cost, path, banned] = node.value();
    if (emitted.insert(path).second) set.paths.push_back(path);
    for (const LinkIndex l : path) {
      auto next_banned = banned;
      next_banned[l] = true;
      if (!visited.insert(next_banned).second) continue;
      if (auto alt = shortest_path(network, od.origin, od.destination, next_banned))
        candidates.emplace(free_flow_cost(network, *alt), std::move(*alt), std::move(next_banned));
    }
  }
  set.composite_utils.assign(set.paths.size(), 0.0);
  set.path_sizes = path_size(set, network);
  return set;
}

std::vector<double> path_size(const PathSet& path_set, const Network& network) {
  if (path_set.paths.empty()) throw RouteChoiceError("path size of an empty path set");
  std::map<LinkIndex, std::size_t> usage;
  for (const auto& path : path_set.paths) {
    for (const LinkIndex l : std::set<LinkIndex>(path.begin(), path.end())) ++usage[l];
  }
  std::vector<double> out;
  out.reserve(path_set.paths.size());
  for (const auto& path : path_set.paths) {
    double total_length = 0.0;
    for (const LinkIndex l : path) total_length += network.link(l).length;
    double ps = 0.0;
    for (const LinkIndex l : path) {
      ps += (network.link(l).length / total_length) / static_cast<double>(usage.at(l));
    }
    out.push_back(ps);
  }
  return out;
}

double path_utility(const Network& network, std::span<const LinkIndex> links, double path_size,
                    double composite, const TollSchedule& tolls, const GuidanceTable& times,
                    const ChoiceCoefficients& coeffs, double departure) {
  double toll = 0.0;
  double travel = 0.0;
  double t = departure;
  for (const LinkIndex l : links) {
    if (const auto gantry = network.gantry_of(l); gantry && tolls.gantry_count() > 0) {
      toll += tolls.toll(*gantry, t);
    }
    const double tt = times.lookup(l, t);
    travel += tt;
    t += tt;
  }
  return coeffs.beta_cost * toll + coeffs.beta_time * travel + std::log(path_size) + composite;
}

std::vector<double> utilities(const PathSet& path_set, const Network& network,
                              const TollSchedule& tolls, const GuidanceTable& guidance,
                              const ChoiceCoefficients& coeffs, double departure) {
  std::vector<double> out;
  out.reserve(path_set.size());
  for (std::size_t k = 0; k < path_set.size(); ++k) {
    out.push_back(path_utility(network, path_set.paths[k], path_set.path_sizes[k],
                               path_set.composite_utils[k], tolls, guidance, coeffs, departure));
  }
  return out;
}

std::vector<double> choice_probabilities(std::span<const double> utilities) {
  if (utilities.empty()) throw RouteChoiceError("choice set is empty");
  const double top = *std::max_element(utilities.begin(), utilities.end());
  if (!std::isfinite(top)) throw RouteChoiceError("non-finite utility");
  std::vector<double> p;
  p.reserve(utilities.size());
  double sum = 0.0;
  for (const double v : utilities) {
    if (!std::isfinite(v)) throw RouteChoiceError("non-finite utility");
    p.push_back(std::exp(v - top));
    sum += p.back();
  }
  for (auto& x : p) x /= sum;
  return p;
}

PathCatalog PathCatalog::enumerate(const Network& network, const std::vector<OdPair>& pairs,
                                   std::size_t k_max) {
  PathCatalog catalog;
  for (const auto& od : pairs) {
    if (!catalog.contains(od)) catalog.add(enumerate_paths(network, od, k_max));
  }
  return catalog;
}

PathCatalog PathCatalog::load(const std::filesystem::path& file, const Network& network) {
  std::ifstream in(file);
  if (!in) throw RouteChoiceError(fmt::format("cannot open path-set file {}", file.string()));

  std::map<OdPair, std::map<std::int64_t, std::pair<Path, double>>> rows;
  std::string raw;
  std::size_t line_no = 0;
  bool first_line = true;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = text::strip_comment(raw);
    if (line.empty()) continue;
    const bool header_allowed = std::exchange(first_line, false);
    const auto f = text::split(line, ',');
    const auto where = fmt::format("{}:{}", file.string(), line_no);
    if (f.size() != 5 || !text::parse_number<NodeId>(f[0])) {
      if (header_allowed) continue;
      throw RouteChoiceError(where + ": expected origin,destination,path_id,links,composite");
    }
    const auto o = text::parse_number<NodeId>(f[0]);
    const auto d = text::parse_number<NodeId>(f[1]);
    const auto id = text::parse_number<std::int64_t>(f[2]);
    const auto c = text::parse_number<double>(f[4]);
    if (!o || !d || !id || !c) throw RouteChoiceError(where + ": malformed path row");
    Path path;
    for (const auto tok : text::tokens(f[3])) {
      const auto link_id = text::parse_number<LinkId>(tok);
      const auto index = link_id ? network.index_of(*link_id) : std::nullopt;
      if (!index) throw RouteChoiceError(fmt::format("{}: unknown link '{}'", where, tok));
      path.push_back(*index);
    }
    if (path.empty()) throw RouteChoiceError(where + ": empty path");
    NodeId at = *o;
    for (const LinkIndex l : path) {
      if (network.link(l).from != at) throw RouteChoiceError(where + ": path links are not contiguous");
      at = network.link(l).to;
    }
    if (at != *d) throw RouteChoiceError(where + ": path does not end at the destination");
    if (!rows[{*o, *d}].emplace(*id, std::pair{std::move(path), *c}).second)
      throw RouteChoiceError(where + ": duplicate path id");
  }

  PathCatalog catalog;
  for (auto& [od, paths] : rows) {
    PathSet set;
    set.od = od;
    std::set<Path> unique;
    for (auto& [id, entry] : paths) {
      if (!unique.insert(entry.first).second)
        throw RouteChoiceError(fmt::format("{}: duplicate path for {}->{}", file.string(), od.origin, od.destination));
      set.paths.push_back(std::move(entry.first));
      set.composite_utils.push_back(entry.second);
    }
    set.path_sizes = path_size(set, network);
    catalog.add(std::move(set));
  }
  return catalog;
}

void PathCatalog::add(PathSet set) {
  const auto od = set.od;
  sets_.insert_or_assign(od, std::move(set));
}

const PathSet& PathCatalog::at(const OdPair& od) const {
  const auto it = sets_.find(od);
  if (it == sets_.end())
    throw RouteChoiceError(fmt::format("no choice set for OD pair {}->{}", od.origin, od.destination));
  return it->second;
}

}  // namespace tollopt
