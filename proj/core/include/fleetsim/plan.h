#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "fleetsim/routing.h"
#include "fleetsim/types.h"

namespace fleetsim {

enum class PlanRequestState { unassigned, offered, booked, picked_up, served };

std::string_view to_string(PlanRequestState s);

/// The operator's view of a traveler request. Times are integer milliseconds.
struct PlanRequest {
  RequestId id = 0;
  NodeId origin = kNoNode;
  NodeId destination = kNoNode;
  int group_size = 1;
  Millis request_time = 0;
  Millis earliest_pickup = 0;
  /// request_time + max_wait; a pickup has to start strictly before it.
  Millis latest_pickup = 0;
  /// (1 + max_detour) * direct travel time.
  Millis max_ride = 0;
  Millis direct_time = 0;
  double direct_distance = 0.0;
  bool reservation = false;
  /// Reservation still beyond the rolling horizon: insertion only.
  bool batch_excluded = false;
  PlanRequestState state = PlanRequestState::unassigned;
  std::optional<VehicleId> vehicle;
  /// Actual departure of the pickup stop, once picked up.
  std::optional<Millis> pickup_departure;

  // Limits used by the feasibility check. They start at the hard values and
  // are only widened for committed requests whose current schedule already
  // exceeds them (execution drift below the millisecond grid).
  Millis pickup_deadline = 0;  // inclusive
  Millis ride_limit = 0;       // inclusive

  bool committed() const { return state == PlanRequestState::booked || state == PlanRequestState::picked_up; }
  void reset_limits() {
    pickup_deadline = latest_pickup - 1;
    ride_limit = max_ride;
  }
};

enum class StopKind { board, charge, reposition, depot };

std::string_view to_string(StopKind k);

struct PlanStop {
  StopKind kind = StopKind::board;
  NodeId node = kNoNode;
  std::vector<RequestId> boarding;
  std::vector<RequestId> alighting;
  std::optional<BookingId> booking;
  double power_kw = 0.0;
  Millis earliest_start = 0;
  Millis duration = 0;
  /// Charge stops must be done by the end of their socket booking.
  Millis latest_end = kInfiniteMillis;

  bool is_service() const { return kind == StopKind::board || kind == StopKind::charge; }
  bool operator==(const PlanStop&) const = default;

  static PlanStop pickup(const PlanRequest& r, Millis boarding_duration);
  static PlanStop dropoff(const PlanRequest& r, Millis boarding_duration);
};

struct StopTiming {
  Millis arrival = 0;
  Millis start = 0;
  Millis departure = 0;
};

/// A hypothetical, ordered task list for one vehicle with its schedule.
struct VehiclePlan {
  VehicleId vehicle_id = 0;
  std::vector<PlanStop> stops;
  std::vector<StopTiming> schedule;
  bool feasible = true;
  Millis cost = 0;

  /// Requests with a pickup stop in this plan, sorted.
  std::vector<RequestId> pickups() const;
  /// Requests served (picked up or dropped off) by this plan, sorted.
  std::vector<RequestId> requests() const;
  /// Service stops only; reposition and depot waypoints are dropped.
  VehiclePlan service_part() const;
  std::optional<std::size_t> pickup_index(RequestId id) const;
  std::optional<std::size_t> dropoff_index(RequestId id) const;
};

/// Planning view of a vehicle at the decision time.
struct VehicleSnapshot {
  VehicleId id = 0;
  int capacity = 4;
  /// Where and when the vehicle is free to follow a new plan.
  Position position;
  Millis available_time = 0;
  /// Requests on board once the current stop (if any) finishes.
  std::vector<std::pair<RequestId, int>> on_board;
  double soc = 1.0;
  double soc_per_m = 0.0;
  /// Charge stops add power * duration of energy to this battery.
  double battery_kwh = 0.0;
  /// Lowest state of charge a plan may reach. Negative only when the
  /// committed plan already goes below zero.
  double soc_floor = 0.0;
  /// State of charge needed after the last stop, e.g. to reach a charging
  /// station from there. Unset means none.
  std::function<double(NodeId)> end_reserve;

  int occupancy() const;
  bool tracks_energy() const { return soc_per_m > 0.0; }
  bool has_on_board(RequestId id) const;
};

struct ControlObjective {
  /// Penalty per unserved request (1e6 s).
  Millis unserved_penalty = 1'000'000'000;
  Millis boarding_duration = 30'000;
};

/// Travel times from a planning snapshot, memoised for one decision.
/// Not thread safe.
class TravelOracle {
 public:
  TravelOracle(Router& router, Seconds t) : router_(router), t_(t) {}

  Seconds time_point() const { return t_; }
  Router& router() { return router_; }

  PathCost cost(const Position& from, NodeId to);
  PathCost cost(NodeId from, NodeId to) { return cost(Position::at_node(from), to); }
  Millis time(const Position& from, NodeId to) { return cost(from, to).time; }
  Millis time(NodeId from, NodeId to) { return cost(from, to).time; }

 private:
  Router& router_;
  Seconds t_;
  std::unordered_map<std::uint64_t, PathCost> nodes_;
  std::map<std::tuple<NodeId, NodeId, double, NodeId>, PathCost> fractional_;
};

/// Request lookup used by the feasibility check.
using RequestTable = std::unordered_map<RequestId, PlanRequest>;

struct PlanCheck {
  bool feasible = false;
  Millis cost = 0;
  std::vector<StopTiming> schedule;
  /// Smallest state of charge along the plan (the end reserve counts
  /// against the last stop); 1.0 when energy is not tracked.
  double soc_margin = 1.0;
};

/// State of charge after a charge stop that charges for `charging` ms.
double soc_after_charge(const VehicleSnapshot& v, double soc, const PlanStop& stop, Millis charging);

/// Schedules `stops` for vehicle `v` and checks every constraint: pickup
/// before dropoff, pickup start within its deadline, ride time within its
/// limit, capacity between stops, booking windows, state of charge (when
/// tracked) and every request on board dropped off. Cost is the completion time of the last service stop
/// measured from the vehicle's available time (0 for no service stops).
PlanCheck check_feasibility_and_cost(const VehicleSnapshot& v, std::span<const PlanStop> stops,
                                     const RequestTable& requests, TravelOracle& oracle);

/// Stop timings without any constraint check (stops until a stop is
/// unreachable).
std::vector<StopTiming> schedule_stops(const VehicleSnapshot& v, std::span<const PlanStop> stops, TravelOracle& oracle);

/// Fills plan.schedule, plan.feasible and plan.cost.
void evaluate(VehiclePlan& plan, const VehicleSnapshot& v, const RequestTable& requests, TravelOracle& oracle);

/// Offer attributes of `id` in a scheduled plan.
struct PlannedService {
  Millis pickup_start = 0;
  Millis pickup_departure = 0;
  Millis dropoff_arrival = 0;
};
std::optional<PlannedService> planned_service(const VehiclePlan& plan, RequestId id);

}  // namespace fleetsim
