#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tollopt {

using NodeId = std::int64_t;
using LinkId = std::int64_t;
using LinkIndex = std::size_t;

struct Link {
  LinkId id = 0;
  NodeId from = 0;
  NodeId to = 0;
  double length = 0.0;          // meters
  double free_flow_time = 0.0;  // seconds
  double capacity = 0.0;        // vehicles per hour at the exit
  std::int64_t storage = 0;     // vehicles

  /// Minimum spacing between consecutive exits, seconds.
  double headway() const { return 3600.0 / capacity; }

  bool operator==(const Link&) const = default;
};

enum class ViolationKind {
  parse_error,
  duplicate_node,
  duplicate_link,
  dangling_node,
  non_positive_length,
  non_positive_free_flow_time,
  non_positive_capacity,
  storage_below_one,
  unknown_gantry,
  duplicate_gantry,
  disconnected,
};

std::string_view to_string(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  std::string message;
};

class NetworkError : public std::runtime_error {
 public:
  explicit NetworkError(std::vector<Violation> violations);

  const std::vector<Violation>& violations() const { return violations_; }
  ViolationKind kind() const { return violations_.front().kind; }

 private:
  std::vector<Violation> violations_;
};

/// Directed road graph with a designated, ordered set of tolled links.
/// Gantry position i in tolled_links() is toll-vector component i everywhere.
/// Construction never throws on bad data; use validate() to inspect it.
class Network {
 public:
  Network() = default;
  Network(std::vector<NodeId> nodes, std::vector<Link> links, std::vector<LinkId> tolled_links);

  const std::vector<NodeId>& nodes() const { return nodes_; }
  const std::vector<Link>& links() const { return links_; }
  const std::vector<LinkId>& tolled_links() const { return tolled_links_; }

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t link_count() const { return links_.size(); }
  std::size_t gantry_count() const { return tolled_links_.size(); }

  const Link& link(LinkIndex index) const { return links_.at(index); }
  std::optional<LinkIndex> index_of(LinkId id) const;
  bool has_node(NodeId id) const { return node_set_.contains(id); }

  /// Toll-vector component charged on entering this link, if any.
  std::optional<std::size_t> gantry_of(LinkIndex index) const { return gantry_of_link_.at(index); }
  /// Link index of gantry component i.
  LinkIndex gantry_link(std::size_t gantry) const { return gantry_links_.at(gantry); }

  std::span<const LinkIndex> outgoing(NodeId node) const;

  bool operator==(const Network& other) const {
    return nodes_ == other.nodes_ && links_ == other.links_ &&
           tolled_links_ == other.tolled_links_;
  }

 private:
  std::vector<NodeId> nodes_;
  std::vector<Link> links_;
  std::vector<LinkId> tolled_links_;

  std::map<NodeId, std::size_t> node_set_;
  std::map<LinkId, LinkIndex> link_index_;
  std::map<NodeId, std::vector<LinkIndex>> outgoing_;
  std::vector<std::optional<std::size_t>> gantry_of_link_;
  std::vector<LinkIndex> gantry_links_;
};

/// Empty iff every Network invariant holds.
std::vector<Violation> validate(const Network& network);

Network parse_network(std::istream& in);
Network load_network(const std::filesystem::path& path);

void write_network(std::ostream& out, const Network& network);
std::string serialize(const Network& network);

}  // namespace tollopt
