#include "fleetsim/plan.h"

#include <algorithm>
#include <set>

#include <fmt/format.h>

namespace fleetsim {

std::string_view to_string(PlanRequestState s) {
  switch (s) {
    case PlanRequestState::unassigned: return "unassigned";
    case PlanRequestState::offered: return "offered";
    case PlanRequestState::booked: return "booked";
    case PlanRequestState::picked_up: return "picked_up";
    case PlanRequestState::served: return "served";
  }
  return "?";
}

std::string_view to_string(StopKind k) {
  switch (k) {
    case StopKind::board: return "board";
    case StopKind::charge: return "charge";
    case StopKind::reposition: return "reposition";
    case StopKind::depot: return "depot";
  }
  return "?";
}

PlanStop PlanStop::pickup(const PlanRequest& r, Millis boarding_duration) {
  PlanStop s;
  s.kind = StopKind::board;
  s.node = r.origin;
  s.boarding = {r.id};
  s.earliest_start = r.earliest_pickup;
  s.duration = boarding_duration;
  return s;
}

PlanStop PlanStop::dropoff(const PlanRequest& r, Millis boarding_duration) {
  PlanStop s;
  s.kind = StopKind::board;
  s.node = r.destination;
  s.alighting = {r.id};
  s.duration = boarding_duration;
  return s;
}

std::vector<RequestId> VehiclePlan::pickups() const {
  std::vector<RequestId> out;
  for (const auto& s : stops) out.insert(out.end(), s.boarding.begin(), s.boarding.end());
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<RequestId> VehiclePlan::requests() const {
  std::set<RequestId> ids;
  for (const auto& s : stops) {
    ids.insert(s.boarding.begin(), s.boarding.end());
    ids.insert(s.alighting.begin(), s.alighting.end());
  }
  return {ids.begin(), ids.end()};
}

VehiclePlan VehiclePlan::service_part() const {
  VehiclePlan out;
  out.vehicle_id = vehicle_id;
  for (std::size_t i = 0; i < stops.size(); ++i) {
    if (!stops[i].is_service()) continue;
    out.stops.push_back(stops[i]);
    if (i < schedule.size()) out.schedule.push_back(schedule[i]);
  }
  if (out.schedule.size() != out.stops.size()) out.schedule.clear();
  out.feasible = feasible;
  out.cost = cost;
  return out;
}

std::optional<std::size_t> VehiclePlan::pickup_index(RequestId id) const {
  for (std::size_t i = 0; i < stops.size(); ++i)
    if (std::find(stops[i].boarding.begin(), stops[i].boarding.end(), id) != stops[i].boarding.end()) return i;
  return std::nullopt;
}

std::optional<std::size_t> VehiclePlan::dropoff_index(RequestId id) const {
  for (std::size_t i = 0; i < stops.size(); ++i)
    if (std::find(stops[i].alighting.begin(), stops[i].alighting.end(), id) != stops[i].alighting.end()) return i;
  return std::nullopt;
}

int VehicleSnapshot::occupancy() const {
  int n = 0;
  for (const auto& [id, g] : on_board) n += g;
  return n;
}

bool VehicleSnapshot::has_on_board(RequestId id) const {
  return std::any_of(on_board.begin(), on_board.end(), [&](const auto& p) { return p.first == id; });
}

PathCost TravelOracle::cost(const Position& from, NodeId to) {
  if (from.is_node()) {
    const auto key = (static_cast<std::uint64_t>(static_cast<std::uint32_t>(from.start_node)) << 32) |
                     static_cast<std::uint32_t>(to);
    auto it = nodes_.find(key);
    if (it != nodes_.end()) return it->second;
    const auto c = router_.cost(from, Position::at_node(to), t_);
    nodes_.emplace(key, c);
    return c;
  }
  const auto key = std::make_tuple(from.start_node, *from.end_node, from.fraction, to);
  auto it = fractional_.find(key);
  if (it != fractional_.end()) return it->second;
  const auto c = router_.cost(from, Position::at_node(to), t_);
  fractional_.emplace(key, c);
  return c;
}

namespace {

struct Load {
  RequestId id;
  int group;
  std::optional<Millis> departure;  // pickup departure when picked up in this plan
};

}  // namespace

double soc_after_charge(const VehicleSnapshot& v, double soc, const PlanStop& stop, Millis charging) {
  if (v.battery_kwh <= 0.0 || charging <= 0) return soc;
  return std::min(1.0, soc + stop.power_kw * (static_cast<double>(charging) / 3.6e6) / v.battery_kwh);
}

PlanCheck check_feasibility_and_cost(const VehicleSnapshot& v, std::span<const PlanStop> stops,
                                     const RequestTable& requests, TravelOracle& oracle) {
  PlanCheck out;
  out.schedule.reserve(stops.size());
  std::vector<Load> load;
  for (const auto& [id, g] : v.on_board) load.push_back({id, g, std::nullopt});
  std::vector<RequestId> picked;
  int seats = v.occupancy();
  Millis time = v.available_time;
  Millis completion = v.available_time;
  Position pos = v.position;
  bool ok = seats <= v.capacity;
  const bool energy = v.tracks_energy();
  double soc = v.soc;
  double margin = energy ? v.soc : 1.0;

  auto lookup = [&](RequestId id) -> const PlanRequest* {
    auto it = requests.find(id);
    return it == requests.end() ? nullptr : &it->second;
  };

  for (const auto& stop : stops) {
    const auto travel = oracle.time(pos, stop.node);
    if (travel >= kInfiniteMillis) {
      ok = false;
      break;
    }
    StopTiming st;
    st.arrival = time + travel;
    st.start = std::max(st.arrival, stop.earliest_start);
    st.departure = st.start + stop.duration;
    if (energy) {
      soc -= static_cast<double>(oracle.cost(pos, stop.node).dist) / 1000.0 * v.soc_per_m;
      margin = std::min(margin, soc);
      if (stop.kind == StopKind::charge) soc = soc_after_charge(v, soc, stop, st.departure - st.start);
    }

    for (auto id : stop.alighting) {
      auto it = std::find_if(load.begin(), load.end(), [&](const Load& l) { return l.id == id; });
      const auto* rq = lookup(id);
      if (it == load.end() || !rq) {
        ok = false;
        break;
      }
      const Millis from = it->departure ? *it->departure : rq->pickup_departure.value_or(st.arrival);
      if (st.arrival - from > rq->ride_limit) ok = false;
      seats -= it->group;
      load.erase(it);
    }
    for (auto id : stop.boarding) {
      const auto* rq = lookup(id);
      if (!rq || stop.node != rq->origin || std::find(picked.begin(), picked.end(), id) != picked.end() ||
          v.has_on_board(id)) {
        ok = false;
        break;
      }
      if (st.start > rq->pickup_deadline || st.start < rq->earliest_pickup) ok = false;
      picked.push_back(id);
      load.push_back({id, rq->group_size, st.departure});
      seats += rq->group_size;
    }
    for (auto id : stop.alighting) {
      const auto* rq = lookup(id);
      if (rq && stop.node != rq->destination) ok = false;
    }
    if (seats > v.capacity) ok = false;
    if (stop.kind == StopKind::charge && st.departure > stop.latest_end) ok = false;
    out.schedule.push_back(st);
    if (stop.is_service()) completion = st.departure;
    time = st.departure;
    pos = Position::at_node(stop.node);
    if (!ok) break;
  }
  if (ok && !load.empty()) ok = false;
  if (energy && ok) {
    if (!stops.empty() && v.end_reserve) margin = std::min(margin, soc - v.end_reserve(stops.back().node));
    if (margin < v.soc_floor - 1e-12) ok = false;
  }
  out.soc_margin = margin;
  out.feasible = ok;
  out.cost = completion - v.available_time;
  return out;
}

std::vector<StopTiming> schedule_stops(const VehicleSnapshot& v, std::span<const PlanStop> stops, TravelOracle& oracle) {
  std::vector<StopTiming> out;
  Millis time = v.available_time;
  Position pos = v.position;
  for (const auto& stop : stops) {
    const auto travel = oracle.time(pos, stop.node);
    if (travel >= kInfiniteMillis) break;
    StopTiming st;
    st.arrival = time + travel;
    st.start = std::max(st.arrival, stop.earliest_start);
    st.departure = st.start + stop.duration;
    out.push_back(st);
    time = st.departure;
    pos = Position::at_node(stop.node);
  }
  return out;
}

void evaluate(VehiclePlan& plan, const VehicleSnapshot& v, const RequestTable& requests, TravelOracle& oracle) {
  auto check = check_feasibility_and_cost(v, plan.stops, requests, oracle);
  plan.feasible = check.feasible;
  plan.cost = check.cost;
  plan.schedule = std::move(check.schedule);
}

std::optional<PlannedService> planned_service(const VehiclePlan& plan, RequestId id) {
  const auto p = plan.pickup_index(id);
  const auto d = plan.dropoff_index(id);
  if (!p || !d || *p >= plan.schedule.size() || *d >= plan.schedule.size()) return std::nullopt;
  return PlannedService{plan.schedule[*p].start, plan.schedule[*p].departure, plan.schedule[*d].arrival};
}

}  // namespace fleetsim
