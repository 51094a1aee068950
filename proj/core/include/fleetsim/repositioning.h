#pragma once

#include <span>
#include <vector>

#include "fleetsim/plan.h"
#include "fleetsim/zones.h"

namespace fleetsim {

struct IdleVehicle {
  VehicleId id = 0;
  NodeId node = kNoNode;
};

struct RepositionMove {
  VehicleId vehicle_id = 0;
  ZoneId from_zone = 0;
  ZoneId to_zone = 0;
  NodeId target = kNoNode;
  Millis travel_time = 0;
};

/// Surplus balancing: s_z = idle vehicles in z minus expected requests in
/// [t, t + horizon). Repeatedly moves the idle vehicle of a surplus zone
/// with the shortest travel time to the centroid of a deficit zone (ties by
/// zone id, then vehicle id) while a move still lowers sum |s_z|.
std::vector<RepositionMove> reposition(const ZoneSystem& zones, const DemandForecast& forecast,
                                       std::span<const IdleVehicle> idle, Seconds t, Seconds horizon,
                                       TravelOracle& oracle);

}  // namespace fleetsim
