#pragma once

#include <deque>
#include <map>
#include <span>
#include <stdexcept>
#include <vector>

#include "tollopt/demand.hpp"
#include "tollopt/guidance.hpp"
#include "tollopt/network.hpp"
#include "tollopt/route_choice.hpp"
#include "tollopt/toll_schedule.hpp"

namespace tollopt {

class SupplyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A departed vehicle that has not reached its destination.
struct VehicleState {
  TripRecord trip;
  Path route;                 // current route; may change at nodes
  std::size_t position = 0;   // index into route of the link occupied or awaited
  bool on_link = false;       // false while queued at the origin
  double link_entry = 0.0;
  double eligible_exit = 0.0;  // link_entry + free-flow time
  bool decided = false;        // en-route choice made for the node ahead

  bool operator==(const VehicleState&) const = default;
};

struct SimulationResult;
struct SupplyContext;

/// Point-queue network state. Copying yields a fully independent state.
class NetworkState {
 public:
  NetworkState() = default;
  NetworkState(const Network& network, double clock);

  double clock() const { return clock_; }
  std::size_t vehicle_count() const { return vehicles_.size(); }
  const std::map<VehicleId, VehicleState>& vehicles() const { return vehicles_; }

  /// Vehicles currently on each link (origin queues excluded).
  std::vector<std::size_t> link_occupancy() const;
  const std::deque<VehicleId>& link_queue(LinkIndex link) const { return link_queues_.at(link); }
  const std::deque<VehicleId>& origin_queue(LinkIndex link) const { return origin_queues_.at(link); }

  /// Drops the vehicle at the back of a link queue; false if the link is empty.
  bool drop_last_on_link(LinkIndex link);
  /// Appends a copy of the vehicle at the back of a link queue under a new
  /// id; false if the link is empty or full.
  bool duplicate_last_on_link(LinkIndex link, VehicleId new_id, std::int64_t storage);

  bool operator==(const NetworkState&) const = default;

 private:
  friend struct SupplyEngine;
  friend SimulationResult simulate(NetworkState&, std::span<const TripRecord>,
                                   const GuidanceTable&, const TollSchedule&, double,
                                   std::uint64_t, const SupplyContext&);

  double clock_ = 0.0;
  std::vector<std::deque<VehicleId>> link_queues_;
  std::vector<std::deque<VehicleId>> origin_queues_;
  std::vector<double> last_exit_;
  std::map<VehicleId, VehicleState> vehicles_;
};

NetworkState clone_state(const NetworkState& state);

/// Everything simulate() reads but never mutates.
struct SupplyContext {
  const Network* network = nullptr;
  const PathCatalog* paths = nullptr;
  ChoiceCoefficients coefficients;
  /// Travel times seen by travelers without access to guidance.
  const GuidanceTable* historical = nullptr;
  bool en_route = true;
};

struct UnfinishedTrip {
  TripRecord trip;
  double accrued = 0.0;  // seconds from departure to the horizon end
};

struct SimulationResult {
  std::vector<TripRecord> completed;
  std::vector<UnfinishedTrip> unfinished;
  /// Mean link traversal time of vehicles entering each (link, interval),
  /// free-flow time where nobody entered. Vehicles still on a link at the
  /// horizon contribute their projected point-queue exit.
  GuidanceTable link_times;
  /// Vehicles entering each link per interval, link-major.
  std::vector<std::vector<std::size_t>> link_counts;
  std::size_t initial_vehicles = 0;
  std::size_t departed = 0;
};

/// Advances `state` to `horizon_end` with 1-second steps under the point-queue
/// model: a vehicle entering link a at t may leave at t + fftime(a), exits are
/// spaced by the link headway, and a vehicle cannot enter a full link.
/// Pre-trip and (optionally) en-route choices use path-size logit. All random
/// draws derive from (seed, vehicle id, decision index), so results do not
/// depend on processing order. Statistics use the guidance interval width.
SimulationResult simulate(NetworkState& state, std::span<const TripRecord> trips,
                          const GuidanceTable& guidance, const TollSchedule& tolls,
                          double horizon_end, std::uint64_t seed, const SupplyContext& context);

}  // namespace tollopt
