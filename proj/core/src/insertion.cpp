#include "fleetsim/insertion.h"

#include <fmt/format.h>

namespace fleetsim {

std::vector<PlanStop> insert_request(std::span<const PlanStop> stops, const PlanRequest& rq, std::size_t pickup_pos,
                                     std::size_t dropoff_pos, Millis boarding_duration) {
  if (pickup_pos > dropoff_pos || dropoff_pos > stops.size())
    throw ConsistencyError(fmt::format("invalid insertion positions ({}, {})", pickup_pos, dropoff_pos));
  std::vector<PlanStop> out;
  out.reserve(stops.size() + 2);
  for (std::size_t k = 0; k <= stops.size(); ++k) {
    if (k == pickup_pos) out.push_back(PlanStop::pickup(rq, boarding_duration));
    if (k == dropoff_pos) out.push_back(PlanStop::dropoff(rq, boarding_duration));
    if (k < stops.size()) out.push_back(stops[k]);
  }
  return out;
}

std::optional<InsertionCandidate> best_insertion(const PlanRequest& rq, const VehicleSnapshot& vehicle,
                                                 const VehiclePlan& current, const RequestTable& requests,
                                                 TravelOracle& oracle, const ControlObjective& objective) {
  const auto& stops = current.stops;
  const auto base = check_feasibility_and_cost(vehicle, stops, requests, oracle);

  // Any pickup start is at least this late; skip hopeless vehicles early.
  const Millis reach = oracle.time(vehicle.position, rq.origin);
  if (reach >= kInfiniteMillis || std::max(vehicle.available_time + reach, rq.earliest_pickup) > rq.pickup_deadline)
    return std::nullopt;

  std::optional<InsertionCandidate> best;
  for (std::size_t i = 0; i <= stops.size(); ++i) {
    // Start of a pickup placed before original stop i. Later positions can
    // only start later (triangle inequality), so stop once it is too late.
    Millis ready = vehicle.available_time;
    Position from = vehicle.position;
    if (i > 0) {
      if (i - 1 >= base.schedule.size()) break;
      ready = base.schedule[i - 1].departure;
      from = Position::at_node(stops[i - 1].node);
    }
    const Millis travel = oracle.time(from, rq.origin);
    if (travel >= kInfiniteMillis) continue;
    if (std::max(ready + travel, rq.earliest_pickup) > rq.pickup_deadline) break;
    for (std::size_t j = i; j <= stops.size(); ++j) {
      auto candidate = insert_request(stops, rq, i, j, objective.boarding_duration);
      auto check = check_feasibility_and_cost(vehicle, candidate, requests, oracle);
      if (!check.feasible) continue;
      const Millis increase = check.cost - base.cost;
      if (!best || increase < best->cost_increase) {
        InsertionCandidate c;
        c.vehicle_id = vehicle.id;
        c.pickup_pos = i;
        c.dropoff_pos = j;
        c.cost_increase = increase;
        c.plan.vehicle_id = vehicle.id;
        c.plan.stops = std::move(candidate);
        c.plan.schedule = std::move(check.schedule);
        c.plan.feasible = true;
        c.plan.cost = check.cost;
        best = std::move(c);
      }
    }
  }
  return best;
}

std::optional<InsertionCandidate> insertion_offer(const PlanRequest& rq, std::span<const VehicleSnapshot> vehicles,
                                                  std::span<const VehiclePlan> plans, const RequestTable& requests,
                                                  TravelOracle& oracle, const ControlObjective& objective) {
  if (plans.size() != vehicles.size()) throw ConsistencyError("insertion_offer: one plan per vehicle expected");
  std::optional<InsertionCandidate> best;
  for (std::size_t k = 0; k < vehicles.size(); ++k) {
    auto c = best_insertion(rq, vehicles[k], plans[k], requests, oracle, objective);
    if (!c) continue;
    if (!best || c->cost_increase < best->cost_increase ||
        (c->cost_increase == best->cost_increase && c->vehicle_id < best->vehicle_id))
      best = std::move(c);
  }
  return best;
}

}  // namespace fleetsim
