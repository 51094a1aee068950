#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string_view>
#include <vector>

#include "fleetsim/batch.h"
#include "fleetsim/demand.h"
#include "fleetsim/fleet.h"
#include "fleetsim/infrastructure.h"
#include "fleetsim/insertion.h"
#include "fleetsim/plan.h"
#include "fleetsim/repositioning.h"
#include "fleetsim/zones.h"

namespace fleetsim {

enum class PricingMode { none, time, utilization };
enum class FleetSizingMode { none, schedule, utilization };

std::string_view to_string(PricingMode m);
std::string_view to_string(FleetSizingMode m);
PricingMode parse_pricing_mode(std::string_view s);
FleetSizingMode parse_fleet_sizing_mode(std::string_view s);

struct OperatorConfig {
  OperatorId id = 0;
  int fleet_size = 0;
  Seconds max_wait = 360.0;
  double max_detour_rel = 0.4;
  Seconds boarding_duration = 30.0;
  /// Batch period; 0 disables re-optimisation in the immediate flow.
  Seconds batch_period = 0.0;
  bool reassignment = true;
  Seconds repo_period = 0.0;
  Seconds repo_horizon = 900.0;
  double soc_threshold = 0.0;
  int charging_candidates = 3;
  double base_fare = 0.0;
  double fare_per_m = 0.0;
  PricingMode pricing_mode = PricingMode::none;
  double pricing_alpha = 0.0;
  double pricing_u_ref = 0.7;
  std::vector<std::pair<Seconds, double>> pricing_table;
  FleetSizingMode fleet_sizing_mode = FleetSizingMode::none;
  Seconds fleet_sizing_period = 900.0;
  double fleet_sizing_target = 0.8;
  double fleet_sizing_band = 0.05;
  std::vector<std::pair<Seconds, int>> fleet_sizing_schedule;
  Seconds reservation_horizon = 1800.0;
  BatchOptions batch;
  Millis unserved_penalty = 1'000'000'000;

  ControlObjective objective() const { return {unserved_penalty, to_millis(boarding_duration)}; }
};

/// Time-dependent fare factor from a step table (1 when empty or before
/// the first entry).
double time_fare_factor(const std::vector<std::pair<Seconds, double>>& table, Seconds t);
/// 1 + alpha * max(0, u - u_ref).
double utilization_fare_factor(double alpha, double u, double u_ref);

struct SizingDecision {
  std::vector<VehicleId> activate;
  std::vector<VehicleId> deactivate;
};

struct OperatorStats {
  int active_vehicles = 0;
  int busy_vehicles = 0;
  int open_requests = 0;
  double utilization = 0.0;
  double fare_factor = 1.0;
  std::size_t batch_runs = 0;
  std::size_t repositioning_runs = 0;
  std::size_t repositioning_moves = 0;
  std::size_t charging_bookings = 0;
  std::size_t fleet_sizing_runs = 0;
  bool last_batch_optimal = true;
};

/// Decision logic of one operator. Owns the planning objects (plan
/// requests, vehicle plans); the executing vehicles are only read, and
/// changed through assign_legs.
class FleetOperator {
 public:
  using RecordSink = std::function<void(const LegRecord&)>;

  FleetOperator(OperatorConfig config, std::vector<Vehicle>& fleet, Router& router, Infrastructure* infrastructure,
                const ZoneSystem* zones, const DemandForecast* forecast, RecordSink sink = {});

  const OperatorConfig& config() const { return cfg_; }
  OperatorId id() const { return cfg_.id; }
  std::vector<Vehicle>& fleet() { return fleet_; }
  const std::vector<Vehicle>& fleet() const { return fleet_; }

  /// Refreshes vehicle snapshots and request limits at time t. Called once
  /// per step after the vehicles moved.
  void prepare(Seconds t);

  /// Immediate response: insertion heuristic; the best insertion is kept
  /// until lock_booking or remove_request.
  Offer user_request(const TravelerRequest& request, Seconds t);

  /// Batch flow: remembers the request until the next batch.
  void register_request(const TravelerRequest& request, Seconds t);
  /// Batch flow: optimises and answers every unanswered request.
  std::vector<std::pair<RequestId, Offer>> batch_offers(Seconds t);

  void lock_booking(RequestId id, Seconds t);
  void remove_request(RequestId id, Seconds t);

  /// Periodic re-optimisation of booked requests (immediate flow).
  void reoptimize(Seconds t);
  std::vector<RepositionMove> run_repositioning(Seconds t);
  std::size_t run_charging(Seconds t);
  SizingDecision run_fleet_sizing(Seconds t);
  double update_pricing(Seconds t);

  /// Turns changed plans into vehicle legs.
  void apply_plans(Seconds t);

  // Execution feedback.
  void on_pickup(const Vehicle& v, RequestId id, Seconds t);
  void on_dropoff(const Vehicle& v, RequestId id, Seconds t);
  void on_leg_complete(const Vehicle& v, const LegRecord& record);

  const VehiclePlan& plan_of(VehicleId id) const;
  const RequestTable& requests() const { return requests_; }
  const PlanRequest* request(RequestId id) const;
  std::optional<TravelInfo> direct_info(RequestId id) const;
  const VehicleSnapshot& snapshot_of(VehicleId id) const;
  double fare_factor() const { return fare_factor_; }
  double utilization() const;
  OperatorStats stats() const;
  Vehicle& vehicle(VehicleId id);

 private:
  struct VehicleState {
    VehiclePlan plan;  // includes the stop in progress, if any
    VehicleSnapshot snapshot;
    bool dirty = false;
  };

  std::size_t index_of(VehicleId id) const;
  bool locked(std::size_t vi) const;
  /// Plan without the stop in progress and without waypoints.
  VehiclePlan planning_plan(std::size_t vi) const;
  void set_plan(std::size_t vi, std::vector<PlanStop> stops);
  PlanRequest make_plan_request(const TravelerRequest& r, Seconds t);
  Offer make_offer(const PlanRequest& rq, const PlannedService& s) const;
  bool available_for_requests(std::size_t vi) const;
  /// Re-optimises all vehicles with the booked requests plus `fresh`;
  /// returns the planned service of every assigned fresh request.
  std::map<RequestId, PlannedService> run_batch(Seconds t, const std::vector<RequestId>& fresh);
  void mark_reservations(Seconds t);
  void relax_limits();
  /// Meters from `node` to the nearest charging station this operator may use.
  double station_reach_m(NodeId node);

  OperatorConfig cfg_;
  std::vector<Vehicle>& fleet_;
  Router& router_;
  Infrastructure* infra_;
  const ZoneSystem* zones_;
  const DemandForecast* forecast_;
  RecordSink sink_;
  ControlObjective objective_;

  std::vector<VehicleState> states_;
  std::map<VehicleId, std::size_t> index_;
  RequestTable requests_;
  std::map<RequestId, TravelInfo> direct_;
  std::map<RequestId, InsertionCandidate> pending_;
  std::vector<RequestId> unanswered_;
  Seconds prepared_at_ = -1.0;
  double fare_factor_ = 1.0;
  std::map<NodeId, double> station_reach_;
  OperatorStats counters_;
};

}  // namespace fleetsim
