#include "fleetsim/infrastructure.h"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "fleetsim/csv.h"

namespace fleetsim {

Seconds estimate_charge_duration(double soc, double battery_kwh, double power_kw) {
  if (!(power_kw > 0.0)) throw ValidationError("charging power must be > 0");
  return std::max(0.0, 1.0 - soc) * battery_kwh / power_kw * 3600.0;
}

Infrastructure::Infrastructure(std::vector<ChargingStation> stations) : stations_(std::move(stations)) {
  for (std::size_t i = 0; i < stations_.size(); ++i) {
    const auto& s = stations_[i];
    if (!index_.emplace(s.station_id, i).second)
      throw ValidationError(fmt::format("duplicate station_id {}", s.station_id));
    if (s.parking_spots < 0) throw ValidationError(fmt::format("station {}: parking_spots must be >= 0", s.station_id));
    std::set<SocketId> ids;
    for (const auto& sock : s.sockets) {
      if (!(sock.power_kw > 0.0))
        throw ValidationError(fmt::format("station {}: socket power must be > 0", s.station_id));
      if (!ids.insert(sock.socket_id).second)
        throw ValidationError(fmt::format("station {}: duplicate socket {}", s.station_id, sock.socket_id));
      calendar_[{s.station_id, sock.socket_id}];
    }
  }
}

std::size_t Infrastructure::index_of(StationId id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw LookupError(fmt::format("unknown station {}", id));
  return it->second;
}

const ChargingStation& Infrastructure::station(StationId id) const { return stations_[index_of(id)]; }

const Socket& Infrastructure::socket_of(StationId station, SocketId socket) const {
  const auto& s = stations_[index_of(station)];
  for (const auto& sock : s.sockets)
    if (sock.socket_id == socket) return sock;
  throw LookupError(fmt::format("station {} has no socket {}", station, socket));
}

Seconds Infrastructure::earliest_gap(StationId station, SocketId socket, Seconds ready, Seconds duration) const {
  auto it = calendar_.find({station, socket});
  if (it == calendar_.end()) throw LookupError(fmt::format("station {} has no socket {}", station, socket));
  std::vector<std::pair<Seconds, Seconds>> busy;
  for (auto id : it->second) {
    const auto& b = bookings_.at(id);
    if (b.expected_end_time > b.start_time) busy.emplace_back(b.start_time, b.expected_end_time);
  }
  std::sort(busy.begin(), busy.end());
  Seconds start = ready;
  if (duration <= 0.0) return start;
  for (const auto& [b0, b1] : busy) {
    if (start + duration <= b0) break;
    if (b1 > start) start = b1;
  }
  return start;
}

std::vector<ChargingOption> Infrastructure::query_charging_options(Router& router, const Position& position,
                                                                   Seconds ready_time, double soc,
                                                                   const VehicleType& vtype, OperatorId op, Seconds t,
                                                                   int k) const {
  std::vector<std::size_t> candidates;
  std::vector<NodeId> nodes;
  for (std::size_t i = 0; i < stations_.size(); ++i) {
    if (!stations_[i].accessible_by(op) || stations_[i].sockets.empty()) continue;
    candidates.push_back(i);
    nodes.push_back(stations_[i].node);
  }
  if (candidates.empty() || k <= 0) return {};
  const auto costs = router.costs_from(position, nodes, t);
  std::vector<std::size_t> order;
  for (std::size_t c = 0; c < candidates.size(); ++c)
    if (costs[c].finite()) order.push_back(c);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (costs[a] != costs[b]) return costs[a] < costs[b];
    return stations_[candidates[a]].station_id < stations_[candidates[b]].station_id;
  });
  if (order.size() > static_cast<std::size_t>(k)) order.resize(static_cast<std::size_t>(k));

  std::lock_guard lock(mutex_);
  std::vector<ChargingOption> out;
  for (auto c : order) {
    const auto& st = stations_[candidates[c]];
    const auto info = TravelInfo::from_cost(costs[c]);
    const double soc_arrival = std::max(0.0, soc - info.distance * vtype.soc_per_m());
    std::optional<ChargingOption> best;
    for (const auto& sock : st.sockets) {
      ChargingOption o;
      o.station_id = st.station_id;
      o.socket_id = sock.socket_id;
      o.node = st.node;
      o.power_kw = sock.power_kw;
      o.travel_time = info.travel_time;
      o.arrival_time = ready_time + info.travel_time;
      o.est_charge_duration = estimate_charge_duration(soc_arrival, vtype.battery_kwh, sock.power_kw);
      o.earliest_slot_start = earliest_gap(st.station_id, sock.socket_id, o.arrival_time, o.est_charge_duration);
      if (!best || o.earliest_slot_start + o.est_charge_duration <
                       best->earliest_slot_start + best->est_charge_duration)
        best = o;
    }
    best->token = BookingToken{best->station_id, best->socket_id, 0, op, best->earliest_slot_start,
                               best->earliest_slot_start + best->est_charge_duration};
    out.push_back(*best);
  }
  return out;
}

Booking Infrastructure::book(const BookingToken& token) {
  std::lock_guard lock(mutex_);
  socket_of(token.station_id, token.socket_id);
  if (token.end_time < token.start_time) throw ValidationError("booking ends before it starts");
  auto& cal = calendar_[{token.station_id, token.socket_id}];
  if (token.end_time > token.start_time) {
    for (auto id : cal) {
      const auto& b = bookings_.at(id);
      if (b.overlaps(token.start_time, token.end_time))
        throw BookingConflictError(fmt::format("station {} socket {}: window [{}, {}) overlaps booking {}",
                                               token.station_id, token.socket_id, token.start_time, token.end_time,
                                               b.booking_id));
    }
  }
  Booking b;
  b.booking_id = next_booking_++;
  b.station_id = token.station_id;
  b.socket_id = token.socket_id;
  b.vehicle_id = token.vehicle_id;
  b.operator_id = token.operator_id;
  b.start_time = token.start_time;
  b.expected_end_time = token.end_time;
  bookings_.emplace(b.booking_id, b);
  cal.push_back(b.booking_id);
  log_.push_back({BookingEventKind::book, token.start_time, b});
  return b;
}

void Infrastructure::release(BookingId id, Seconds actual_end) {
  std::lock_guard lock(mutex_);
  auto it = bookings_.find(id);
  if (it == bookings_.end()) throw LookupError(fmt::format("unknown booking {}", id));
  auto& b = it->second;
  if (b.released) return;
  b.released = true;
  b.expected_end_time = std::clamp(actual_end, b.start_time, b.expected_end_time);
  log_.push_back({BookingEventKind::release, actual_end, b});
}

const Booking& Infrastructure::booking(BookingId id) const {
  std::lock_guard lock(mutex_);
  auto it = bookings_.find(id);
  if (it == bookings_.end()) throw LookupError(fmt::format("unknown booking {}", id));
  return it->second;
}

std::vector<Booking> Infrastructure::bookings() const {
  std::lock_guard lock(mutex_);
  std::vector<Booking> out;
  for (const auto& [id, b] : bookings_) out.push_back(b);
  return out;
}

void Infrastructure::record_delivery(BookingId id, double kwh) {
  std::lock_guard lock(mutex_);
  auto it = bookings_.find(id);
  if (it == bookings_.end()) throw LookupError(fmt::format("unknown booking {}", id));
  delivered_[it->second.station_id] += kwh;
}

double Infrastructure::energy_delivered(StationId station) const {
  std::lock_guard lock(mutex_);
  auto it = delivered_.find(station);
  return it == delivered_.end() ? 0.0 : it->second;
}

std::optional<StationId> Infrastructure::nearest_free_depot(Router& router, const Position& position, OperatorId op,
                                                             Seconds t) const {
  std::vector<std::size_t> candidates;
  std::vector<NodeId> nodes;
  {
    std::lock_guard lock(mutex_);
    for (std::size_t i = 0; i < stations_.size(); ++i) {
      const auto& s = stations_[i];
      if (s.access != StationAccess::depot || s.operator_id != op) continue;
      auto p = parked_.find(s.station_id);
      if ((p == parked_.end() ? 0 : p->second) >= s.parking_spots) continue;
      candidates.push_back(i);
      nodes.push_back(s.node);
    }
  }
  if (candidates.empty()) return std::nullopt;
  const auto costs = router.costs_from(position, nodes, t);
  std::optional<std::size_t> best;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    if (!costs[c].finite()) continue;
    if (!best || costs[c] < costs[*best] ||
        (costs[c] == costs[*best] && stations_[candidates[c]].station_id < stations_[candidates[*best]].station_id))
      best = c;
  }
  if (!best) return std::nullopt;
  return stations_[candidates[*best]].station_id;
}

void Infrastructure::reserve_parking(StationId station, VehicleId vehicle, OperatorId op) {
  std::lock_guard lock(mutex_);
  const auto& s = stations_[index_of(station)];
  if (s.access != StationAccess::depot || s.operator_id != op)
    throw ConsistencyError(fmt::format("station {} is not a depot of operator {}", station, op));
  if (parking_.count({op, vehicle})) throw ConsistencyError(fmt::format("vehicle {} already holds a parking spot", vehicle));
  int& n = parked_[station];
  if (n >= s.parking_spots) throw BookingConflictError(fmt::format("depot {} has no free parking spot", station));
  ++n;
  parking_[{op, vehicle}] = station;
}

void Infrastructure::release_parking(VehicleId vehicle, OperatorId op) {
  std::lock_guard lock(mutex_);
  auto it = parking_.find({op, vehicle});
  if (it == parking_.end()) return;
  --parked_[it->second];
  parking_.erase(it);
}

int Infrastructure::parked_count(StationId station) const {
  std::lock_guard lock(mutex_);
  auto it = parked_.find(station);
  return it == parked_.end() ? 0 : it->second;
}

std::optional<StationId> Infrastructure::parking_of(VehicleId vehicle, OperatorId op) const {
  std::lock_guard lock(mutex_);
  auto it = parking_.find({op, vehicle});
  if (it == parking_.end()) return std::nullopt;
  return it->second;
}

bool booking_log_is_exclusive(const std::vector<BookingEvent>& log) {
  std::map<BookingId, Booking> state;
  for (const auto& ev : log) {
    if (ev.kind == BookingEventKind::book) {
      for (const auto& [id, b] : state) {
        if (b.station_id == ev.booking.station_id && b.socket_id == ev.booking.socket_id &&
            ev.booking.expected_end_time > ev.booking.start_time && b.expected_end_time > b.start_time &&
            b.overlaps(ev.booking.start_time, ev.booking.expected_end_time))
          return false;
      }
    }
    state[ev.booking.booking_id] = ev.booking;
  }
  return true;
}

std::vector<ChargingStation> load_stations(const std::filesystem::path& file, const Network& network) {
  auto table = csv::Table::read(file);
  std::vector<ChargingStation> out;
  for (std::size_t r = 0; r < table.rows(); ++r) {
    const auto where = fmt::format("{} line {}", file.string(), table.line_of(r));
    ChargingStation s;
    s.station_id = static_cast<StationId>(table.get_int(r, "station_id"));
    s.node = static_cast<NodeId>(table.get_int(r, "node"));
    if (!network.has_node(s.node)) throw ValidationError(fmt::format("{}: node {} is not in the network", where, s.node));
    const auto access = table.get(r, "access").value_or("public");
    if (access == "public") {
      s.access = StationAccess::public_access;
    } else if (access == "depot") {
      s.access = StationAccess::depot;
    } else {
      throw ValidationError(fmt::format("{}: access must be public or depot, got '{}'", where, access));
    }
    s.operator_id = static_cast<OperatorId>(table.get_int_or(r, "operator_id", -1));
    if (s.access == StationAccess::depot && s.operator_id < 0)
      throw ValidationError(fmt::format("{}: depot needs an operator_id", where));
    s.parking_spots = static_cast<int>(table.get_int_or(r, "parking_spots", 0));
    const auto powers = table.get(r, "socket_powers").value_or("");
    SocketId sid = 0;
    for (const auto& p : csv::split(powers, ';')) {
      if (csv::trim(p).empty()) continue;
      s.sockets.push_back({sid++, csv::parse_double(p, "socket_powers")});
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace fleetsim
