#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <vector>

#include "fleetsim/fleet.h"
#include "fleetsim/routing.h"
#include "fleetsim/types.h"

namespace fleetsim {

using StationId = std::int32_t;
using SocketId = std::int32_t;

enum class StationAccess { public_access, depot };

struct Socket {
  SocketId socket_id = 0;
  double power_kw = 0.0;
};

struct ChargingStation {
  StationId station_id = 0;
  NodeId node = kNoNode;
  std::vector<Socket> sockets;
  StationAccess access = StationAccess::public_access;
  OperatorId operator_id = -1;  // owner of a depot
  int parking_spots = 0;

  bool accessible_by(OperatorId op) const { return access == StationAccess::public_access || operator_id == op; }
};

struct Booking {
  BookingId booking_id = 0;
  StationId station_id = 0;
  SocketId socket_id = 0;
  VehicleId vehicle_id = 0;
  OperatorId operator_id = 0;
  Seconds start_time = 0.0;
  Seconds expected_end_time = 0.0;
  bool released = false;

  /// Half-open occupation window [start_time, expected_end_time).
  bool overlaps(Seconds start, Seconds end) const { return start < expected_end_time && start_time < end; }
};

/// Result of a charging query; hands the chosen window to book().
struct BookingToken {
  StationId station_id = 0;
  SocketId socket_id = 0;
  VehicleId vehicle_id = 0;
  OperatorId operator_id = 0;
  Seconds start_time = 0.0;
  Seconds end_time = 0.0;
};

struct ChargingOption {
  StationId station_id = 0;
  SocketId socket_id = 0;
  NodeId node = kNoNode;
  double power_kw = 0.0;
  Seconds travel_time = 0.0;
  Seconds arrival_time = 0.0;
  Seconds earliest_slot_start = 0.0;
  Seconds est_charge_duration = 0.0;
  BookingToken token;
};

enum class BookingEventKind { book, release };

struct BookingEvent {
  BookingEventKind kind = BookingEventKind::book;
  Seconds time = 0.0;
  Booking booking;  // state after the event
};

/// (1 - soc) * battery / power, in seconds.
Seconds estimate_charge_duration(double soc, double battery_kwh, double power_kw);

/// Depots, public charging stations, parking, and the exclusive socket
/// calendar. book() and release() are atomic; queries are read-only.
class Infrastructure {
 public:
  Infrastructure() = default;
  explicit Infrastructure(std::vector<ChargingStation> stations);
  Infrastructure(const Infrastructure&) = delete;
  Infrastructure& operator=(const Infrastructure&) = delete;

  const std::vector<ChargingStation>& stations() const { return stations_; }
  const ChargingStation& station(StationId id) const;

  /// The k accessible stations nearest by travel time (ties by station id),
  /// one option each using the socket whose charge would finish first.
  std::vector<ChargingOption> query_charging_options(Router& router, const Position& position, Seconds ready_time,
                                                     double soc, const VehicleType& vtype, OperatorId op, Seconds t,
                                                     int k) const;

  /// Throws BookingConflictError when the window overlaps an existing booking.
  Booking book(const BookingToken& token);
  /// Ends the booking at actual_end (never extends it). Throws LookupError
  /// for an unknown id.
  void release(BookingId id, Seconds actual_end);
  const Booking& booking(BookingId id) const;
  std::vector<Booking> bookings() const;
  const std::vector<BookingEvent>& booking_log() const { return log_; }

  /// Earliest start >= ready on a socket with a free window of `duration`.
  Seconds earliest_gap(StationId station, SocketId socket, Seconds ready, Seconds duration) const;

  void record_delivery(BookingId id, double kwh);
  double energy_delivered(StationId station) const;

  /// Nearest depot of `op` by travel time with a free parking spot.
  std::optional<StationId> nearest_free_depot(Router& router, const Position& position, OperatorId op, Seconds t) const;
  void reserve_parking(StationId station, VehicleId vehicle, OperatorId op);
  void release_parking(VehicleId vehicle, OperatorId op);
  int parked_count(StationId station) const;
  std::optional<StationId> parking_of(VehicleId vehicle, OperatorId op) const;

 private:
  std::size_t index_of(StationId id) const;
  const Socket& socket_of(StationId station, SocketId socket) const;

  std::vector<ChargingStation> stations_;
  std::map<StationId, std::size_t> index_;
  std::map<std::pair<StationId, SocketId>, std::vector<BookingId>> calendar_;
  std::map<BookingId, Booking> bookings_;
  std::vector<BookingEvent> log_;
  BookingId next_booking_ = 1;
  std::map<StationId, double> delivered_;
  std::map<std::pair<OperatorId, VehicleId>, StationId> parking_;
  std::map<StationId, int> parked_;
  mutable std::mutex mutex_;
};

/// Replays a booking log; true iff no two bookings on a socket overlap.
bool booking_log_is_exclusive(const std::vector<BookingEvent>& log);

/// Reads `station_id,node,access,operator_id,parking_spots,socket_powers`.
std::vector<ChargingStation> load_stations(const std::filesystem::path& file, const Network& network);

}  // namespace fleetsim
