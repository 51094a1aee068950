#pragma once

#include <deque>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fleetsim/network.h"
#include "fleetsim/types.h"

namespace fleetsim {

struct VehicleType {
  std::string type_id;
  int capacity = 4;
  double fix_cost = 0.0;
  double distance_cost = 0.0;  // per meter
  double battery_kwh = 50.0;
  double range_m = std::numeric_limits<double>::infinity();

  /// kWh per meter; zero for unlimited range.
  double consumption_per_m() const {
    return std::isinf(range_m) ? 0.0 : battery_kwh / range_m;
  }
  /// State of charge lost per meter driven.
  double soc_per_m() const { return std::isinf(range_m) ? 0.0 : 1.0 / range_m; }

  void validate() const;
};

enum class LegKind { drive, board, charge, reposition_drive, to_depot };

std::string_view to_string(LegKind k);
inline bool is_drive(LegKind k) { return k == LegKind::drive || k == LegKind::reposition_drive || k == LegKind::to_depot; }

struct Boarding {
  RequestId request_id = 0;
  int group_size = 1;
};

/// One concrete vehicle task.
struct RouteLeg {
  LegKind kind = LegKind::drive;
  /// Drive kinds: destination; other kinds: where the task happens.
  Position target;
  Route route;  // drive kinds only
  std::vector<RequestId> alighting;
  std::vector<Boarding> boarding;
  std::optional<BookingId> booking;
  double power_kw = 0.0;
  Seconds earliest_start = 0.0;
  Seconds min_duration = 0.0;
  /// Charge legs stop at this time at the latest (end of the socket booking).
  Seconds latest_end = std::numeric_limits<double>::infinity();

  static RouteLeg drive(Route r, LegKind kind = LegKind::drive);
  static RouteLeg stop(NodeId at, std::vector<RequestId> alighting, std::vector<Boarding> boarding,
                       Seconds earliest_start, Seconds duration);
  static RouteLeg charge(NodeId at, BookingId booking, double power_kw, Seconds earliest_start, Seconds duration,
                         Seconds latest_end);
};

struct LegRecord {
  OperatorId operator_id = 0;
  VehicleId vehicle_id = 0;
  LegKind kind = LegKind::drive;
  Seconds start_time = 0.0;
  Seconds end_time = 0.0;
  Position start_position;
  Position end_position;
  double distance = 0.0;
  std::vector<RequestId> boarded;
  std::vector<RequestId> alighted;
  double energy_charged_kwh = 0.0;
  std::optional<BookingId> booking;
  double soc_start = 1.0;
  double soc_end = 1.0;
  /// Seats in use while driving, or after the stop for board legs.
  int occupancy = 0;
  /// The leg was cut short (replaced mid-drive or still running at the end).
  bool terminated = false;
};

class Vehicle;

/// Receives execution progress. Boarding callbacks are issued in order:
/// all alightings of a stop, then all boardings, then on_leg_complete.
class VehicleObserver {
 public:
  virtual ~VehicleObserver() = default;
  virtual void on_alight(const Vehicle&, RequestId, Seconds /*stop_start*/, Seconds /*t*/) {}
  virtual void on_board(const Vehicle&, RequestId, Seconds /*stop_start*/, Seconds /*t*/) {}
  virtual void on_leg_complete(const Vehicle&, const LegRecord&) {}
  virtual void on_stranded(const Vehicle&, Seconds /*t*/) {}
};

/// Executing agent with typed attributes, dynamic state and a leg queue.
class Vehicle {
 public:
  Vehicle(VehicleId id, OperatorId op, VehicleType type, Position start, double soc = 1.0);

  VehicleId id() const { return id_; }
  OperatorId operator_id() const { return operator_id_; }
  const VehicleType& type() const { return type_; }
  const Position& position() const { return position_; }
  double soc() const { return soc_; }
  bool active() const { return active_; }
  void set_active(bool a) { active_ = a; }
  bool stranded() const { return stranded_; }
  Seconds clock() const { return clock_; }

  const std::vector<Boarding>& on_board() const { return on_board_; }
  int occupancy() const;

  const std::deque<RouteLeg>& legs() const { return legs_; }
  bool idle() const { return legs_.empty(); }
  /// A board or charge leg has started and cannot be interrupted.
  bool locked_in_stop() const;
  /// When the current non-interruptible stop finishes (clock() otherwise).
  Seconds available_at() const;
  /// Position once the current non-interruptible stop finishes.
  Position available_position() const { return position_; }
  /// Frozen travel time of the edge currently being driven.
  std::optional<Seconds> current_edge_time() const { return current_edge_time_; }
  const Route& current_route() const { return route_left_; }

  double cumulative_distance() const { return cumulative_distance_; }
  double energy_charged_kwh() const { return energy_charged_kwh_; }

  /// Executes the leg queue over [t_from, t_to].
  std::vector<LegRecord> update(Seconds t_from, Seconds t_to, const Network& net, VehicleObserver* observer);

  /// Replaces the queue. An in-progress board or charge leg finishes first;
  /// an in-progress drive is cut at the current position and its record
  /// returned. Throws ConsistencyError when the first leg does not start
  /// where the vehicle will be.
  std::vector<LegRecord> assign_legs(std::vector<RouteLeg> legs, const Network& net);

  /// Terminates whatever is running at end_time and returns its record.
  std::vector<LegRecord> finalize(Seconds end_time);

 private:
  void start_leg(const RouteLeg& leg, Seconds t);
  LegRecord make_record(const RouteLeg& leg, Seconds end, bool terminated) const;
  void finish_leg(std::vector<LegRecord>& out, Seconds end, VehicleObserver* observer);
  void check_splice(const std::vector<RouteLeg>& legs, const Position& from) const;

  VehicleId id_;
  OperatorId operator_id_;
  VehicleType type_;
  Position position_;
  double soc_;
  bool active_ = true;
  bool stranded_ = false;
  Seconds clock_ = 0.0;
  std::vector<Boarding> on_board_;
  std::deque<RouteLeg> legs_;
  std::optional<std::vector<RouteLeg>> pending_;

  // Progress of the head leg.
  bool leg_active_ = false;
  Seconds leg_start_time_ = 0.0;
  Seconds process_start_ = 0.0;
  Position leg_start_position_;
  double leg_distance_ = 0.0;
  double leg_soc_start_ = 1.0;
  double leg_energy_ = 0.0;
  Route route_left_;
  std::optional<Seconds> current_edge_time_;

  double cumulative_distance_ = 0.0;
  double energy_charged_kwh_ = 0.0;
};

struct VehicleFinalState {
  OperatorId operator_id = 0;
  VehicleId vehicle_id = 0;
  std::string type_id;
  Position position;
  double soc = 1.0;
  std::vector<RequestId> on_board;
  double cumulative_distance = 0.0;
  bool active = true;
};

std::vector<VehicleFinalState> finalize_vehicles(std::vector<Vehicle>& fleet, Seconds end_time,
                                                 std::vector<LegRecord>* terminated_records = nullptr);

/// Reads `type_id,capacity,fix_cost,dist_cost,battery_kwh,range_m`.
std::vector<VehicleType> load_vehicle_types(const std::filesystem::path& file);

struct InitialVehicle {
  VehicleId vehicle_id = 0;
  std::string type_id;
  NodeId start_node = kNoNode;
  double soc = 1.0;
  OperatorId operator_id = 0;
};

/// Reads `vehicle_id,type_id,start_node[,soc][,operator_id]`.
std::vector<InitialVehicle> load_initial_fleet(const std::filesystem::path& file, const Network& network);

std::string format_position(const Position& p);

}  // namespace fleetsim
