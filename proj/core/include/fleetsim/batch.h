#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fleetsim/assignment_solver.h"
#include "fleetsim/plan.h"

namespace fleetsim {

struct BatchOptions {
  /// Largest number of pool requests added to one vehicle's schedule.
  int max_bundle = 4;
  /// Candidate plans kept per vehicle (current and base plans not counted).
  int max_plans_per_vehicle = 300;
  /// Node budget of the stop-ordering search for one bundle.
  std::uint64_t ordering_node_limit = 200'000;
  std::uint64_t solver_node_limit = 2'000'000;
};

struct BatchVehicle {
  VehicleSnapshot snapshot;
  /// The plan the vehicle follows now (service stops only).
  VehiclePlan current;
  /// Booked requests that have to stay on this vehicle.
  std::vector<RequestId> pinned;
  /// Non-request stops that every plan keeps (charging).
  std::vector<PlanStop> fixed_stops;
};

struct BatchInput {
  std::vector<BatchVehicle> vehicles;
  /// Requests the optimiser may place on any vehicle.
  std::vector<RequestId> pool;
  /// Pool members already promised to a traveler; dropping one costs far
  /// more than any number of unserved new requests.
  std::vector<RequestId> must_serve;
};

struct BatchResult {
  std::vector<VehiclePlan> plans;  // one per input vehicle
  std::vector<RequestId> unassigned;
  Millis objective = 0;
  bool optimal = true;
  std::size_t candidate_plans = 0;
};

/// Best stop order for the vehicle's mandatory stops plus `extra` requests
/// (exact search within the node budget). Empty if none is feasible.
std::optional<VehiclePlan> best_ordering(const BatchVehicle& vehicle, std::span<const RequestId> extra,
                                         const RequestTable& requests, TravelOracle& oracle,
                                         const ControlObjective& objective, std::uint64_t node_limit = 200'000);

/// True unless the two requests provably cannot share any vehicle.
bool requests_compatible(const PlanRequest& a, const PlanRequest& b, int capacity, const RequestTable& requests,
                         TravelOracle& oracle, const ControlObjective& objective);

/// Objective weight of leaving a pool request unserved.
Millis unserved_weight(bool must_serve, std::size_t pool_size, const ControlObjective& objective);

/// Enumerates feasible plans per vehicle (growing request bundles level by
/// level) and selects one plan per vehicle with the exact assignment solver.
BatchResult batch_optimize(const BatchInput& input, const RequestTable& requests, TravelOracle& oracle,
                           const ControlObjective& objective, const BatchOptions& options = {});

}  // namespace fleetsim
