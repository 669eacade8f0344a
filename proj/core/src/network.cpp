#include "tollopt/network.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "text.hpp"

namespace tollopt {

std::string_view to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::parse_error: return "parse-error";
    case ViolationKind::duplicate_node: return "duplicate-node";
    case ViolationKind::duplicate_link: return "duplicate-link";
    case ViolationKind::dangling_node: return "dangling-node";
    case ViolationKind::non_positive_length: return "non-positive-length";
    case ViolationKind::non_positive_free_flow_time: return "non-positive-free-flow-time";
    case ViolationKind::non_positive_capacity: return "non-positive-capacity";
    case ViolationKind::storage_below_one: return "storage-below-one";
    case ViolationKind::unknown_gantry: return "unknown-gantry";
    case ViolationKind::duplicate_gantry: return "duplicate-gantry";
    case ViolationKind::disconnected: return "disconnected";
  }
  return "unknown";
}

namespace {

std::string join_messages(const std::vector<Violation>& violations) {
  std::string out;
  for (const auto& v : violations) {
    if (!out.empty()) out += "; ";
    out += v.message;
  }
  return out;
}

}  // namespace

NetworkError::NetworkError(std::vector<Violation> violations)
    : std::runtime_error(join_messages(violations)), violations_(std::move(violations)) {}

Network::Network(std::vector<NodeId> nodes, std::vector<Link> links, std::vector<LinkId> tolled_links)
    : nodes_(std::move(nodes)), links_(std::move(links)), tolled_links_(std::move(tolled_links)) {
  for (std::size_t i = 0; i < nodes_.size(); ++i) node_set_.emplace(nodes_[i], i);
  for (LinkIndex i = 0; i < links_.size(); ++i) {
    link_index_.emplace(links_[i].id, i);
    outgoing_[links_[i].from].push_back(i);
  }
  gantry_of_link_.assign(links_.size(), std::nullopt);
  for (std::size_t g = 0; g < tolled_links_.size(); ++g) {
    const auto index = index_of(tolled_links_[g]);
    gantry_links_.push_back(index.value_or(links_.size()));
    if (index && !gantry_of_link_[*index]) gantry_of_link_[*index] = g;
  }
}

std::optional<LinkIndex> Network::index_of(LinkId id) const {
  if (const auto it = link_index_.find(id); it != link_index_.end()) return it->second;
  return std::nullopt;
}

std::span<const LinkIndex> Network::outgoing(NodeId node) const {
  if (const auto it = outgoing_.find(node); it != outgoing_.end()) return it->second;
  return {};
}

std::vector<Violation> validate(const Network& network) {
  std::vector<Violation> out;
  auto add = [&out](ViolationKind kind, std::string message) {
    out.push_back({kind, std::move(message)});
  };

  std::set<NodeId> nodes;
  for (const NodeId n : network.nodes()) {
    if (!nodes.insert(n).second) add(ViolationKind::duplicate_node, fmt::format("duplicate node {}", n));
  }

  std::set<LinkId> links;
  for (const auto& l : network.links()) {
    if (!links.insert(l.id).second) add(ViolationKind::duplicate_link, fmt::format("duplicate link {}", l.id));
    if (!nodes.contains(l.from))
      add(ViolationKind::dangling_node, fmt::format("link {} references missing node {}", l.id, l.from));
    if (!nodes.contains(l.to))
      add(ViolationKind::dangling_node, fmt::format("link {} references missing node {}", l.id, l.to));
    if (!(l.length > 0.0))
      add(ViolationKind::non_positive_length, fmt::format("link {} has non-positive length", l.id));
    if (!(l.free_flow_time > 0.0))
      add(ViolationKind::non_positive_free_flow_time,
          fmt::format("link {} has non-positive free-flow time", l.id));
    if (!(l.capacity > 0.0))
      add(ViolationKind::non_positive_capacity, fmt::format("link {} has non-positive capacity", l.id));
    if (l.storage < 1)
      add(ViolationKind::storage_below_one, fmt::format("link {} has storage below one", l.id));
  }

  std::set<LinkId> gantries;
  for (const LinkId g : network.tolled_links()) {
    if (!links.contains(g)) add(ViolationKind::unknown_gantry, fmt::format("gantry on unknown link {}", g));
    if (!gantries.insert(g).second)
      add(ViolationKind::duplicate_gantry, fmt::format("link {} listed twice as gantry", g));
  }

  // Weak connectivity over every declared node.
  if (!nodes.empty()) {
    std::map<NodeId, std::vector<NodeId>> adjacency;
    for (const auto& l : network.links()) {
      if (nodes.contains(l.from) && nodes.contains(l.to)) {
        adjacency[l.from].push_back(l.to);
        adjacency[l.to].push_back(l.from);
      }
    }
    std::set<NodeId> seen{*nodes.begin()};
    std::vector<NodeId> stack{*nodes.begin()};
    while (!stack.empty()) {
      const NodeId n = stack.back();
      stack.pop_back();
      for (const NodeId m : adjacency[n]) {
        if (seen.insert(m).second) stack.push_back(m);
      }
    }
    if (seen.size() != nodes.size()) {
      add(ViolationKind::disconnected,
          fmt::format("network is not weakly connected ({} of {} nodes reachable)", seen.size(),
                      nodes.size()));
    }
  }
  return out;
}

namespace {

enum class Section { none, nodes, links, gantries };

[[noreturn]] void parse_fail(std::size_t line_no, std::string_view what) {
  throw NetworkError({{ViolationKind::parse_error, fmt::format("line {}: {}", line_no, what)}});
}

template <class T>
T field(std::string_view s, std::size_t line_no, std::string_view name) {
  const auto v = text::parse_number<T>(s);
  if (!v) parse_fail(line_no, fmt::format("invalid {} '{}'", name, s));
  return *v;
}

}  // namespace

Network parse_network(std::istream& in) {
  std::vector<NodeId> nodes;
  std::vector<Link> links;
  std::vector<LinkId> gantries;

  Section section = Section::none;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = text::strip_comment(raw);
    if (line.empty()) continue;
    if (line == "NODES") {
      section = Section::nodes;
    } else if (line == "LINKS") {
      section = Section::links;
    } else if (line == "GANTRIES") {
      section = Section::gantries;
    } else {
      switch (section) {
        case Section::none:
          parse_fail(line_no, "data before any section header");
        case Section::nodes:
          nodes.push_back(field<NodeId>(line, line_no, "node id"));
          break;
        case Section::links: {
          const auto f = text::split(line, ',');
          if (f.size() != 7)
            parse_fail(line_no, fmt::format("expected 7 link fields, got {}", f.size()));
          links.push_back(Link{
              .id = field<LinkId>(f[0], line_no, "link id"),
              .from = field<NodeId>(f[1], line_no, "from node"),
              .to = field<NodeId>(f[2], line_no, "to node"),
              .length = field<double>(f[3], line_no, "length"),
              .free_flow_time = field<double>(f[4], line_no, "free-flow time"),
              .capacity = field<double>(f[5], line_no, "capacity"),
              .storage = field<std::int64_t>(f[6], line_no, "storage"),
          });
          break;
        }
        case Section::gantries:
          gantries.push_back(field<LinkId>(line, line_no, "gantry link id"));
          break;
      }
    }
  }

  Network network(std::move(nodes), std::move(links), std::move(gantries));
  if (auto violations = validate(network); !violations.empty()) throw NetworkError(std::move(violations));
  return network;
}

Network load_network(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw NetworkError({{ViolationKind::parse_error, fmt::format("cannot open network file {}", path.string())}});
  }
  return parse_network(in);
}

void write_network(std::ostream& out, const Network& network) {
  out << "NODES\n";
  for (const NodeId n : network.nodes()) out << n << '\n';
  out << "LINKS\n# id,from,to,length,fftime,capacity,storage\n";
  for (const auto& l : network.links()) {
    out << fmt::format("{},{},{},{},{},{},{}\n", l.id, l.from, l.to, l.length, l.free_flow_time,
                       l.capacity, l.storage);
  }
  out << "GANTRIES\n";
  for (const LinkId g : network.tolled_links()) out << g << '\n';
}

std::string serialize(const Network& network) {
  std::ostringstream out;
  write_network(out, network);
  return out.str();
}

}  // namespace tollopt
