#include "tollopt/supply.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "tollopt/rng.hpp"

namespace tollopt {

NetworkState::NetworkState(const Network& network, double clock)
    : clock_(clock),
      link_queues_(network.link_count()),
      origin_queues_(network.link_count()),
      last_exit_(network.link_count(), -std::numeric_limits<double>::infinity()) {}

std::vector<std::size_t> NetworkState::link_occupancy() const {
  std::vector<std::size_t> out;
  out.reserve(link_queues_.size());
  for (const auto& q : link_queues_) out.push_back(q.size());
  return out;
}

bool NetworkState::drop_last_on_link(LinkIndex link) {
  auto& queue = link_queues_.at(link);
  if (queue.empty()) return false;
  vehicles_.erase(queue.back());
  queue.pop_back();
  return true;
}

bool NetworkState::duplicate_last_on_link(LinkIndex link, VehicleId new_id, std::int64_t storage) {
  auto& queue = link_queues_.at(link);
  if (queue.empty() || static_cast<std::int64_t>(queue.size()) >= storage) return false;
  if (vehicles_.contains(new_id)) throw SupplyError(fmt::format("vehicle id {} already in use", new_id));
  VehicleState copy = vehicles_.at(queue.back());
  copy.trip.vehicle = new_id;
  vehicles_.emplace(new_id, std::move(copy));
  queue.push_back(new_id);
  return true;
}

NetworkState clone_state(const NetworkState& state) { return state; }

struct SupplyEngine {
  NetworkState& state;
  const SupplyContext& ctx;
  const Network& net;
  const GuidanceTable& guidance;
  const TollSchedule& tolls;
  std::uint64_t seed;
  double horizon;

  SimulationResult result;
  std::vector<double> time_sum;  // link-major, per stats interval
  std::vector<std::size_t> enter_count;
  std::size_t intervals = 0;

  const GuidanceTable& times_for(const VehicleState& v) const {
    if (!v.trip.informed && ctx.historical != nullptr) return *ctx.historical;
    return guidance;
  }

  std::optional<std::size_t> cell(double time) const {
    const auto& grid = result.link_times;
    if (time < grid.start()) return std::nullopt;
    const auto i = static_cast<std::size_t>(std::floor((time - grid.start()) / grid.interval()));
    if (i >= intervals) return std::nullopt;
    return i;
  }

  void record_entry(LinkIndex link, double entry) {
    if (const auto i = cell(entry)) ++enter_count[link * intervals + *i];
  }

  void record_traversal(LinkIndex link, double entry, double exit) {
    if (const auto i = cell(entry)) time_sum[link * intervals + *i] += exit - entry;
  }

  void choose_pre_trip(VehicleState& v) {
    const auto& set = ctx.paths->at(v.trip.od);
    std::size_t k = 0;
    if (set.size() > 1) {
      const auto u = utilities(set, net, tolls, times_for(v), ctx.coefficients, v.trip.departure_time);
      const auto p = choice_probabilities(u);
      SplitMix64 rng(derive_seed(seed, v.trip.vehicle, 0));
      k = sample_choice(std::span<const double>(p), rng);
    }
    v.route = set.paths[k];
    v.trip.chosen_path = k;
  }

  /// Re-evaluates the remaining route at the node ahead of the current link.
  void choose_en_route(VehicleState& v, double now) {
    v.decided = true;
    if (!ctx.en_route || !v.trip.informed) return;
    const NodeId node = net.link(v.route[v.position]).to;
    if (node == v.trip.od.destination) return;
    const auto& set = ctx.paths->at(v.trip.od);

    std::vector<std::size_t> options;
    std::vector<std::span<const LinkIndex>> suffixes;
    for (std::size_t k = 0; k < set.size(); ++k) {
      const auto& path = set.paths[k];
      const auto it = std::find_if(path.begin(), path.end(),
                                   [&](LinkIndex l) { return net.link(l).from == node; });
      if (it == path.end()) continue;
      std::span<const LinkIndex> suffix(&*it, static_cast<std::size_t>(path.end() - it));
      const bool seen = std::any_of(suffixes.begin(), suffixes.end(), [&](const auto& s) {
        return std::equal(s.begin(), s.end(), suffix.begin(), suffix.end());
      });
      if (seen) continue;
      options.push_back(k);
      suffixes.push_back(suffix);
    }
    if (options.size() < 2) return;

    std::vector<double> u;
    u.reserve(options.size());
    for (std::size_t j = 0; j < options.size(); ++j) {
      const auto k = options[j];
      u.push_back(path_utility(net, suffixes[j], set.path_sizes[k], set.composite_utils[k], tolls,
                               times_for(v), ctx.coefficients, now));
    }
    const auto p = choice_probabilities(u);
    SplitMix64 rng(derive_seed(seed, v.trip.vehicle, v.position + 1));
    const auto j = sample_choice(std::span<const double>(p), rng);
    Path next(v.route.begin(), v.route.begin() + static_cast<std::ptrdiff_t>(v.position) + 1);
    next.insert(next.end(), suffixes[j].begin(), suffixes[j].end());
    v.route = std::move(next);
    v.trip.chosen_path = options[j];
  }

  bool has_room(LinkIndex link) const {
    return static_cast<std::int64_t>(state.link_queues_[link].size()) < net.link(link).storage;
  }

  void discharge(LinkIndex l, double t, double t_prev) {
    auto& queue = state.link_queues_[l];
    const double headway = net.link(l).headway();
    while (!queue.empty()) {
      const VehicleId id = queue.front();
      auto& v = state.vehicles_.at(id);
      const double ready = std::max(v.eligible_exit, state.last_exit_[l] + headway);
      if (ready > t) return;
      // A vehicle that was ready in an earlier step was held by spillback.
      const double exit = ready > t_prev ? ready : t;

      if (v.position + 1 == v.route.size()) {
        record_traversal(l, v.link_entry, exit);
        state.last_exit_[l] = exit;
        queue.pop_front();
        TripRecord trip = v.trip;
        trip.experienced_tt = exit - trip.departure_time;
        result.completed.push_back(trip);
        state.vehicles_.erase(id);
        continue;
      }

      if (!v.decided) choose_en_route(v, exit);
      const LinkIndex next = v.route[v.position + 1];
      if (!has_room(next)) return;

      record_traversal(l, v.link_entry, exit);
      state.last_exit_[l] = exit;
      queue.pop_front();
      ++v.position;
      v.decided = false;
      v.link_entry = exit;
      v.eligible_exit = exit + net.link(next).free_flow_time;
      state.link_queues_[next].push_back(id);
      record_entry(next, exit);
    }
  }

  void load_origin(LinkIndex l, double t, double t_prev, bool first_step) {
    auto& waiting = state.origin_queues_[l];
    while (!waiting.empty() && has_room(l)) {
      const VehicleId id = waiting.front();
      waiting.pop_front();
      auto& v = state.vehicles_.at(id);
      const bool departed_this_step =
          v.trip.departure_time > t_prev || (first_step && v.trip.departure_time >= t_prev);
      const double entry = departed_this_step ? v.trip.departure_time : t;
      v.on_link = true;
      v.link_entry = entry;
      v.eligible_exit = entry + net.link(l).free_flow_time;
      state.link_queues_[l].push_back(id);
      record_entry(l, entry);
    }
  }

  /// Projected exit times for vehicles still on links at the horizon.
  void project_remaining() {
    for (LinkIndex l = 0; l < net.link_count(); ++l) {
      double previous = state.last_exit_[l];
      const double headway = net.link(l).headway();
      for (const VehicleId id : state.link_queues_[l]) {
        const auto& v = state.vehicles_.at(id);
        const double exit = std::max({v.eligible_exit, previous + headway, horizon});
        record_traversal(l, v.link_entry, exit);
        previous = exit;
      }
    }
  }
};

SimulationResult simulate(NetworkState& state, std::span<const TripRecord> trips,
                          const GuidanceTable& guidance, const TollSchedule& tolls,
                          double horizon_end, std::uint64_t seed, const SupplyContext& context) {
  if (context.network == nullptr || context.paths == nullptr)
    throw SupplyError("supply context needs a network and a path catalog");
  const Network& net = *context.network;
  if (state.link_queues_.size() != net.link_count())
    throw SupplyError("network state does not match the network");
  if (horizon_end < state.clock_) throw SupplyError("horizon precedes the state clock");
  if (guidance.link_count() != net.link_count() || guidance.interval_count() == 0)
    throw SupplyError("guidance does not cover every link");
  if (guidance.start() > state.clock_ + 1e-9)
    throw SupplyError(fmt::format("guidance coverage gap: guidance starts at {}, clock is {}",
                                  guidance.start(), state.clock_));
  if (net.gantry_count() > 0 && tolls.gantry_count() != net.gantry_count())
    throw SupplyError(fmt::format("toll coverage gap: schedule has {} gantries, network has {}",
                                  tolls.gantry_count(), net.gantry_count()));

  std::vector<TripRecord> pending(trips.begin(), trips.end());
  for (const auto& trip : pending) {
    if (trip.departure_time < state.clock_ || trip.departure_time > horizon_end)
      throw SupplyError(fmt::format("trip {} departs at {} outside [{}, {}]", trip.vehicle,
                                    trip.departure_time, state.clock_, horizon_end));
    if (state.vehicles_.contains(trip.vehicle))
      throw SupplyError(fmt::format("vehicle id {} is already in the network", trip.vehicle));
  }
  std::stable_sort(pending.begin(), pending.end(), [](const TripRecord& a, const TripRecord& b) {
    return a.departure_time < b.departure_time ||
           (a.departure_time == b.departure_time && a.vehicle < b.vehicle);
  });

  SupplyEngine engine{state, context, net, guidance, tolls, seed, horizon_end, {}, {}, {}, 0};
  const double width = guidance.interval();
  engine.intervals = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil((horizon_end - state.clock_) / width - 1e-9)));
  engine.result.link_times = GuidanceTable(state.clock_, width, engine.intervals, net.link_count());
  engine.time_sum.assign(net.link_count() * engine.intervals, 0.0);
  engine.enter_count.assign(net.link_count() * engine.intervals, 0);
  engine.result.initial_vehicles = state.vehicles_.size();

  std::size_t next_trip = 0;
  double t_prev = state.clock_;
  while (t_prev < horizon_end) {
    const double t = std::min(t_prev + 1.0, horizon_end);
    for (LinkIndex l = 0; l < net.link_count(); ++l) engine.discharge(l, t, t_prev);

    for (; next_trip < pending.size() && pending[next_trip].departure_time <= t; ++next_trip) {
      VehicleState v;
      v.trip = pending[next_trip];
      engine.choose_pre_trip(v);
      const LinkIndex first = v.route.front();
      const VehicleId id = v.trip.vehicle;
      state.vehicles_.emplace(id, std::move(v));
      state.origin_queues_[first].push_back(id);
      ++engine.result.departed;
    }
    // The first step window is closed on the left so trips departing exactly
    // at the initial clock enter without delay.
    const bool first_step = t_prev == state.clock_;
    for (LinkIndex l = 0; l < net.link_count(); ++l) engine.load_origin(l, t, t_prev, first_step);
    t_prev = t;
  }
  state.clock_ = horizon_end;
  engine.project_remaining();

  auto& result = engine.result;
  result.link_counts.assign(net.link_count(), std::vector<std::size_t>(engine.intervals, 0));
  for (LinkIndex l = 0; l < net.link_count(); ++l) {
    for (std::size_t i = 0; i < engine.intervals; ++i) {
      const auto n = engine.enter_count[l * engine.intervals + i];
      result.link_counts[l][i] = n;
      const double fft = net.link(l).free_flow_time;
      const double mean = n > 0 ? engine.time_sum[l * engine.intervals + i] / static_cast<double>(n) : fft;
      result.link_times.set(l, i, std::max(mean, fft));
    }
  }
  for (const auto& [id, v] : state.vehicles_) {
    result.unfinished.push_back({v.trip, horizon_end - v.trip.departure_time});
  }
  return std::move(engine.result);
}

}  // namespace tollopt
