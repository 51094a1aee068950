#pragma once

#include <optional>
#include <span>

#include "fleetsim/plan.h"

namespace fleetsim {

struct InsertionCandidate {
  VehicleId vehicle_id = 0;
  /// Pickup goes before original stop `pickup_pos`, dropoff before original
  /// stop `dropoff_pos` (pickup_pos <= dropoff_pos).
  std::size_t pickup_pos = 0;
  std::size_t dropoff_pos = 0;
  Millis cost_increase = 0;
  VehiclePlan plan;
};

/// Builds the stop list with the request's pickup and dropoff inserted.
std::vector<PlanStop> insert_request(std::span<const PlanStop> stops, const PlanRequest& rq, std::size_t pickup_pos,
                                     std::size_t dropoff_pos, Millis boarding_duration);

/// Cheapest feasible insertion of `rq` into one vehicle's service plan.
/// `rq` must be present in `requests`. Ties go to the smaller index pair.
std::optional<InsertionCandidate> best_insertion(const PlanRequest& rq, const VehicleSnapshot& vehicle,
                                                 const VehiclePlan& current, const RequestTable& requests,
                                                 TravelOracle& oracle, const ControlObjective& objective);

/// Cheapest feasible insertion over the fleet (ties: vehicle id, then index
/// pair). plans[i] is the current service plan of vehicles[i].
std::optional<InsertionCandidate> insertion_offer(const PlanRequest& rq, std::span<const VehicleSnapshot> vehicles,
                                                  std::span<const VehiclePlan> plans, const RequestTable& requests,
                                                  TravelOracle& oracle, const ControlObjective& objective);

}  // namespace fleetsim
