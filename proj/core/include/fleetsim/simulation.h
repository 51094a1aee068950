#pragma once

#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <vector>

#include "fleetsim/config.h"
#include "fleetsim/demand.h"
#include "fleetsim/evaluation.h"
#include "fleetsim/fleet.h"
#include "fleetsim/fleet_control.h"
#include "fleetsim/infrastructure.h"
#include "fleetsim/network.h"
#include "fleetsim/records.h"
#include "fleetsim/routing.h"
#include "fleetsim/zones.h"

namespace fleetsim {

/// Data loaded for one scenario.
struct ScenarioData {
  Network network;
  std::vector<TravelerRequest> demand;
  std::vector<VehicleType> vehicle_types;
  /// Initial fleet; generated from the operator fleet sizes when no fleet
  /// file is configured.
  std::vector<InitialVehicle> fleet;
  std::vector<ChargingStation> stations;
  std::optional<ZoneSystem> zones;
  std::optional<DemandForecast> forecast;
};

/// Loads every file referenced by the configuration. Throws
/// MissingFileError, ValidationError or StructuralError.
ScenarioData load_scenario_data(const ScenarioConfig& config);

/// Evenly spread start nodes for a generated fleet.
std::vector<InitialVehicle> generate_fleet(const ScenarioConfig& config, const Network& network);

struct TriggerCounts {
  std::size_t batch = 0;
  std::size_t repositioning = 0;
  std::size_t fleet_sizing = 0;
};

struct SimulationResult {
  std::filesystem::path output_dir;
  KpiReport kpi;
  std::size_t steps = 0;
  std::vector<TriggerCounts> triggers;  // per operator
  std::vector<VehicleFinalState> final_states;
  std::vector<BookingEvent> booking_log;
};

/// One scenario: clock, demand, operators, vehicles and infrastructure.
class Simulation {
 public:
  Simulation(ScenarioConfig config, ScenarioData data, std::optional<std::filesystem::path> output_dir = std::nullopt);
  ~Simulation();
  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;

  /// Runs every step, finalizes and evaluates.
  SimulationResult run();

  /// Step-wise control: step 0 is the start time.
  bool done() const { return next_step_ > steps_; }
  void step();
  SimulationResult finish();

  Seconds now() const { return now_; }
  std::size_t step_count() const { return steps_; }
  const ScenarioConfig& config() const { return cfg_; }
  const Network& network() const { return data_.network; }
  Router& router() { return *router_; }
  Demand& demand() { return demand_; }
  Infrastructure& infrastructure() { return *infra_; }
  std::vector<Vehicle>& fleet(OperatorId op) { return fleets_.at(static_cast<std::size_t>(op)); }
  FleetOperator& op(OperatorId op) { return *operators_.at(static_cast<std::size_t>(op)); }
  std::size_t operator_count() const { return operators_.size(); }
  const std::vector<TriggerCounts>& triggers() const { return triggers_; }
  const std::filesystem::path& output_dir() const { return out_dir_; }

 private:
  class Bridge;

  void handle_ids(const std::vector<RequestId>& revealed, Seconds t, std::vector<TimeStatsRow>& rows);
  void handle_bos(const std::vector<RequestId>& revealed, Seconds t, std::size_t k, std::vector<TimeStatsRow>& rows);
  void decide(RequestId id, const std::vector<Offer>& offers, Seconds t);
  void run_triggers(Seconds t, std::size_t k);
  void write_user(const TravelerRequest& r);
  void write_leg(const LegRecord& r);
  bool period_hit(std::size_t k, Seconds period) const;

  ScenarioConfig cfg_;
  ScenarioData data_;
  std::filesystem::path out_dir_;
  std::unique_ptr<Router> router_;
  std::unique_ptr<Infrastructure> infra_;
  Demand demand_;
  std::deque<std::vector<Vehicle>> fleets_;
  std::vector<std::unique_ptr<FleetOperator>> operators_;
  std::unique_ptr<Bridge> bridge_;
  std::unique_ptr<RecordWriter> writer_;
  std::map<std::pair<OperatorId, VehicleId>, int> capacity_;
  std::set<RequestId> written_;
  std::map<RequestId, std::vector<std::optional<Offer>>> collecting_;
  std::vector<TriggerCounts> triggers_;
  std::size_t steps_ = 0;
  std::size_t next_step_ = 0;
  Seconds now_ = 0.0;
  bool finished_ = false;
};

/// Loads the data, runs the scenario and writes all outputs to
/// config.output_dir / config.scenario_name.
SimulationResult run_scenario(const ScenarioConfig& config);

}  // namespace fleetsim
