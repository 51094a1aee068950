#include "fleetsim/fleet.h"

#include <algorithm>
#include <set>

#include <fmt/format.h>

#include "fleetsim/csv.h"

namespace fleetsim {

void VehicleType::validate() const {
  if (capacity < 1) throw ValidationError(fmt::format("vehicle type {}: capacity must be >= 1", type_id));
  if (!(battery_kwh > 0.0)) throw ValidationError(fmt::format("vehicle type {}: battery_kwh must be > 0", type_id));
  if (!(range_m > 0.0)) throw ValidationError(fmt::format("vehicle type {}: range_m must be > 0", type_id));
  if (fix_cost < 0.0 || distance_cost < 0.0)
    throw ValidationError(fmt::format("vehicle type {}: costs must be >= 0", type_id));
}

std::string_view to_string(LegKind k) {
  switch (k) {
    case LegKind::drive: return "drive";
    case LegKind::board: return "board";
    case LegKind::charge: return "charge";
    case LegKind::reposition_drive: return "reposition_drive";
    case LegKind::to_depot: return "to_depot";
  }
  return "?";
}

RouteLeg RouteLeg::drive(Route r, LegKind kind) {
  if (!is_drive(kind)) throw ConsistencyError("drive leg needs a drive kind");
  if (r.empty()) throw ConsistencyError("drive leg needs a non-empty route");
  RouteLeg leg;
  leg.kind = kind;
  leg.target = Position::at_node(r.nodes.back());
  leg.route = std::move(r);
  return leg;
}

RouteLeg RouteLeg::stop(NodeId at, std::vector<RequestId> alighting, std::vector<Boarding> boarding,
                        Seconds earliest_start, Seconds duration) {
  RouteLeg leg;
  leg.kind = LegKind::board;
  leg.target = Position::at_node(at);
  leg.alighting = std::move(alighting);
  leg.boarding = std::move(boarding);
  leg.earliest_start = earliest_start;
  leg.min_duration = duration;
  return leg;
}

RouteLeg RouteLeg::charge(NodeId at, BookingId booking, double power_kw, Seconds earliest_start, Seconds duration,
                          Seconds latest_end) {
  RouteLeg leg;
  leg.kind = LegKind::charge;
  leg.target = Position::at_node(at);
  leg.booking = booking;
  leg.power_kw = power_kw;
  leg.earliest_start = earliest_start;
  leg.min_duration = duration;
  leg.latest_end = latest_end;
  return leg;
}

Vehicle::Vehicle(VehicleId id, OperatorId op, VehicleType type, Position start, double soc)
    : id_(id), operator_id_(op), type_(std::move(type)), position_(start), soc_(soc) {
  type_.validate();
  if (!(soc >= 0.0 && soc <= 1.0)) throw ValidationError(fmt::format("vehicle {}: soc {} outside [0,1]", id, soc));
}

int Vehicle::occupancy() const {
  int n = 0;
  for (const auto& b : on_board_) n += b.group_size;
  return n;
}

bool Vehicle::locked_in_stop() const { return leg_active_ && !legs_.empty() && !is_drive(legs_.front().kind); }

Seconds Vehicle::available_at() const {
  if (!locked_in_stop()) return clock_;
  const auto& leg = legs_.front();
  Seconds end = process_start_ + leg.min_duration;
  if (leg.kind == LegKind::charge) end = std::max(process_start_, std::min(end, leg.latest_end));
  if (leg.kind == LegKind::charge && leg.power_kw > 0.0) {
    const Seconds full =
        std::max(process_start_, clock_) + std::max(0.0, 1.0 - soc_) * type_.battery_kwh / leg.power_kw * 3600.0;
    end = std::min(end, full);
  }
  return std::max(end, clock_);
}

void Vehicle::start_leg(const RouteLeg& leg, Seconds t) {
  leg_active_ = true;
  leg_start_time_ = t;
  leg_start_position_ = position_;
  leg_distance_ = 0.0;
  leg_soc_start_ = soc_;
  leg_energy_ = 0.0;
  if (is_drive(leg.kind)) {
    route_left_ = leg.route;
    if (route_left_.empty() || route_left_.nodes.front() != position_.start_node)
      throw ConsistencyError(fmt::format("vehicle {}: drive leg does not start at its position", id_));
  } else {
    if (!position_.is_node() || position_.start_node != leg.target.start_node)
      throw ConsistencyError(fmt::format("vehicle {}: {} leg at node {} but vehicle is at {}", id_, to_string(leg.kind),
                                         leg.target.start_node, format_position(position_)));
    process_start_ = std::max(t, leg.earliest_start);
  }
}

LegRecord Vehicle::make_record(const RouteLeg& leg, Seconds end, bool terminated) const {
  LegRecord r;
  r.operator_id = operator_id_;
  r.vehicle_id = id_;
  r.kind = leg.kind;
  r.start_time = leg_start_time_;
  r.end_time = end;
  r.start_position = leg_start_position_;
  r.end_position = position_;
  r.distance = leg_distance_;
  r.energy_charged_kwh = leg_energy_;
  r.booking = leg.booking;
  r.soc_start = leg_soc_start_;
  r.soc_end = soc_;
  r.occupancy = occupancy();
  r.terminated = terminated;
  return r;
}

void Vehicle::finish_leg(std::vector<LegRecord>& out, Seconds end, VehicleObserver* observer) {
  RouteLeg leg = std::move(legs_.front());
  legs_.pop_front();
  LegRecord rec;
  if (leg.kind == LegKind::board) {
    for (auto rid : leg.alighting) {
      auto it = std::find_if(on_board_.begin(), on_board_.end(), [&](const Boarding& b) { return b.request_id == rid; });
      if (it == on_board_.end())
        throw ConsistencyError(fmt::format("vehicle {}: request {} alights but is not on board", id_, rid));
      on_board_.erase(it);
      if (observer) observer->on_alight(*this, rid, process_start_, end);
    }
    for (const auto& b : leg.boarding) {
      on_board_.push_back(b);
      if (observer) observer->on_board(*this, b.request_id, process_start_, end);
    }
    if (occupancy() > type_.capacity)
      throw ConsistencyError(fmt::format("vehicle {}: occupancy {} exceeds capacity {} at t={}", id_, occupancy(),
                                         type_.capacity, end));
    rec = make_record(leg, end, false);
    for (auto rid : leg.alighting) rec.alighted.push_back(rid);
    for (const auto& b : leg.boarding) rec.boarded.push_back(b.request_id);
  } else {
    rec = make_record(leg, end, false);
  }
  leg_active_ = false;
  route_left_ = {};
  if (pending_) {
    legs_.assign(std::make_move_iterator(pending_->begin()), std::make_move_iterator(pending_->end()));
    pending_.reset();
  }
  if (observer) observer->on_leg_complete(*this, rec);
  out.push_back(std::move(rec));
}

std::vector<LegRecord> Vehicle::update(Seconds t_from, Seconds t_to, const Network& net, VehicleObserver* observer) {
  if (!(t_to > t_from)) throw ConsistencyError(fmt::format("vehicle {}: update needs t_to > t_from", id_));
  std::vector<LegRecord> out;
  Seconds t = std::max(t_from, clock_);
  while (!stranded_ && !legs_.empty() && t < t_to) {
    const RouteLeg& leg = legs_.front();
    if (!leg_active_) start_leg(leg, t);
    if (is_drive(leg.kind)) {
      const auto adv = advance_position(net, position_, route_left_, t_to - t, t, current_edge_time_);
      double soc_next = soc_ - adv.distance * type_.soc_per_m();
      position_ = adv.position;
      leg_distance_ += adv.distance;
      cumulative_distance_ += adv.distance;
      route_left_ = adv.remaining;
      current_edge_time_ = adv.current_edge_time;
      if (soc_next < -1e-12) {
        soc_ = 0.0;
        stranded_ = true;
        const Seconds at = t + adv.time_consumed;
        out.push_back(make_record(leg, at, true));
        legs_.clear();
        pending_.reset();
        leg_active_ = false;
        if (observer) observer->on_stranded(*this, at);
        break;
      }
      soc_ = std::max(0.0, soc_next);
      if (route_left_.empty()) {
        t += adv.time_consumed;
        finish_leg(out, t, observer);
      } else {
        t = t_to;
      }
    } else if (leg.kind == LegKind::board) {
      const Seconds end = process_start_ + leg.min_duration;
      if (end <= t_to) {
        t = std::max(t, end);
        finish_leg(out, t, observer);
      } else {
        t = t_to;
      }
    } else {
      // Constant power charging; the leg ends at its planned duration or
      // when the battery is full, whichever is first.
      const double rate = leg.power_kw / 3600.0 / type_.battery_kwh;  // soc per second
      Seconds end = std::max(process_start_, std::min(process_start_ + leg.min_duration, leg.latest_end));
      if (rate > 0.0) end = std::min(end, std::max(process_start_, t) + (1.0 - soc_) / rate);
      const Seconds until = std::min(end, t_to);
      const Seconds from = std::max(t, process_start_);
      if (until > from) {
        double gained = (until - from) * rate;
        if (soc_ + gained >= 1.0 - 1e-9) gained = 1.0 - soc_;
        soc_ += gained;
        leg_energy_ += gained * type_.battery_kwh;
        energy_charged_kwh_ += gained * type_.battery_kwh;
      }
      if (end <= t_to) {
        t = std::max(t, end);
        finish_leg(out, t, observer);
      } else {
        t = t_to;
      }
    }
  }
  clock_ = t_to;
  return out;
}

void Vehicle::check_splice(const std::vector<RouteLeg>& legs, const Position& from) const {
  if (legs.empty()) {
    if (!from.is_node())
      throw ConsistencyError(fmt::format("vehicle {}: cannot stop mid-edge at {}", id_, format_position(from)));
    return;
  }
  const auto& first = legs.front();
  if (is_drive(first.kind)) {
    const auto& nodes = first.route.nodes;
    bool ok = !nodes.empty() && nodes.front() == from.start_node;
    if (ok && from.end_node) ok = nodes.size() >= 2 && nodes[1] == *from.end_node;
    if (!ok)
      throw ConsistencyError(fmt::format("vehicle {}: first route does not splice at {}", id_, format_position(from)));
  } else if (!from.is_node() || from.start_node != first.target.start_node) {
    throw ConsistencyError(fmt::format("vehicle {}: first {} leg at node {} but vehicle is at {}", id_,
                                       to_string(first.kind), first.target.start_node, format_position(from)));
  }
}

std::vector<LegRecord> Vehicle::assign_legs(std::vector<RouteLeg> legs, const Network& net) {
  for (const auto& leg : legs) {
    if (is_drive(leg.kind)) net.validate(leg.route);
  }
  std::vector<LegRecord> out;
  if (stranded_) {
    if (!legs.empty()) throw ConsistencyError(fmt::format("vehicle {} is stranded", id_));
    return out;
  }
  if (locked_in_stop()) {
    check_splice(legs, position_);
    pending_ = std::move(legs);
    return out;
  }
  check_splice(legs, position_);
  if (leg_active_) {
    // Cut the running drive where the vehicle is now.
    out.push_back(make_record(legs_.front(), clock_, true));
    leg_active_ = false;
    route_left_ = {};
  }
  pending_.reset();
  legs_.assign(std::make_move_iterator(legs.begin()), std::make_move_iterator(legs.end()));
  return out;
}

std::vector<LegRecord> Vehicle::finalize(Seconds end_time) {
  std::vector<LegRecord> out;
  if (leg_active_ && !legs_.empty()) {
    out.push_back(make_record(legs_.front(), std::max(end_time, leg_start_time_), true));
    leg_active_ = false;
  }
  legs_.clear();
  pending_.reset();
  return out;
}

std::vector<VehicleFinalState> finalize_vehicles(std::vector<Vehicle>& fleet, Seconds end_time,
                                                 std::vector<LegRecord>* terminated_records) {
  std::vector<VehicleFinalState> out;
  out.reserve(fleet.size());
  for (auto& v : fleet) {
    auto recs = v.finalize(end_time);
    if (terminated_records) terminated_records->insert(terminated_records->end(), recs.begin(), recs.end());
    VehicleFinalState s;
    s.operator_id = v.operator_id();
    s.vehicle_id = v.id();
    s.type_id = v.type().type_id;
    s.position = v.position();
    s.soc = v.soc();
    for (const auto& b : v.on_board()) s.on_board.push_back(b.request_id);
    s.cumulative_distance = v.cumulative_distance();
    s.active = v.active();
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<VehicleType> load_vehicle_types(const std::filesystem::path& file) {
  auto table = csv::Table::read(file);
  std::vector<VehicleType> out;
  std::set<std::string> seen;
  for (std::size_t r = 0; r < table.rows(); ++r) {
    VehicleType vt;
    vt.type_id = table.at(r, table.column("type_id"));
    vt.capacity = static_cast<int>(table.get_int(r, "capacity"));
    vt.fix_cost = table.get_double_or(r, "fix_cost", 0.0);
    vt.distance_cost = table.get_double_or(r, "dist_cost", 0.0);
    vt.battery_kwh = table.get_double(r, "battery_kwh");
    vt.range_m = table.get_double(r, "range_m");
    if (!seen.insert(vt.type_id).second)
      throw ValidationError(fmt::format("{} line {}: duplicate type_id {}", file.string(), table.line_of(r), vt.type_id));
    try {
      vt.validate();
    } catch (const ValidationError& e) {
      throw ValidationError(fmt::format("{} line {}: {}", file.string(), table.line_of(r), e.what()));
    }
    out.push_back(std::move(vt));
  }
  return out;
}

std::vector<InitialVehicle> load_initial_fleet(const std::filesystem::path& file, const Network& network) {
  auto table = csv::Table::read(file);
  std::vector<InitialVehicle> out;
  std::set<std::pair<OperatorId, VehicleId>> seen;
  for (std::size_t r = 0; r < table.rows(); ++r) {
    InitialVehicle v;
    v.vehicle_id = static_cast<VehicleId>(table.get_int(r, "vehicle_id"));
    v.type_id = table.at(r, table.column("type_id"));
    v.start_node = static_cast<NodeId>(table.get_int(r, "start_node"));
    v.soc = table.get_double_or(r, "soc", 1.0);
    v.operator_id = static_cast<OperatorId>(table.get_int_or(r, "operator_id", 0));
    const auto where = fmt::format("{} line {}", file.string(), table.line_of(r));
    if (!network.has_node(v.start_node))
      throw ValidationError(fmt::format("{}: start_node {} is not in the network", where, v.start_node));
    if (!(v.soc >= 0.0 && v.soc <= 1.0)) throw ValidationError(fmt::format("{}: soc outside [0,1]", where));
    if (!seen.insert({v.operator_id, v.vehicle_id}).second)
      throw ValidationError(fmt::format("{}: duplicate vehicle_id {}", where, v.vehicle_id));
    out.push_back(std::move(v));
  }
  return out;
}

std::string format_position(const Position& p) {
  if (p.is_node()) return fmt::format("{}", p.start_node);
  return fmt::format("{}-{}@{:.6f}", p.start_node, *p.end_node, p.fraction);
}

}  // namespace fleetsim
