#include "fleetsim/fleet_control.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace fleetsim {

std::string_view to_string(PricingMode m) {
  switch (m) {
    case PricingMode::none: return "none";
    case PricingMode::time: return "time";
    case PricingMode::utilization: return "utilization";
  }
  return "?";
}

std::string_view to_string(FleetSizingMode m) {
  switch (m) {
    case FleetSizingMode::none: return "none";
    case FleetSizingMode::schedule: return "schedule";
    case FleetSizingMode::utilization: return "utilization";
  }
  return "?";
}

PricingMode parse_pricing_mode(std::string_view s) {
  if (s == "none" || s.empty()) return PricingMode::none;
  if (s == "time") return PricingMode::time;
  if (s == "utilization") return PricingMode::utilization;
  throw ValidationError(fmt::format("unknown pricing mode '{}'", s));
}

FleetSizingMode parse_fleet_sizing_mode(std::string_view s) {
  if (s == "none" || s.empty()) return FleetSizingMode::none;
  if (s == "schedule") return FleetSizingMode::schedule;
  if (s == "utilization") return FleetSizingMode::utilization;
  throw ValidationError(fmt::format("unknown fleet sizing mode '{}'", s));
}

double time_fare_factor(const std::vector<std::pair<Seconds, double>>& table, Seconds t) {
  double f = 1.0;
  for (const auto& [start, factor] : table) {
    if (start > t) break;
    f = factor;
  }
  return f;
}

double utilization_fare_factor(double alpha, double u, double u_ref) { return 1.0 + alpha * std::max(0.0, u - u_ref); }

FleetOperator::FleetOperator(OperatorConfig config, std::vector<Vehicle>& fleet, Router& router,
                             Infrastructure* infrastructure, const ZoneSystem* zones, const DemandForecast* forecast,
                             RecordSink sink)
    : cfg_(std::move(config)),
      fleet_(fleet),
      router_(router),
      infra_(infrastructure),
      zones_(zones),
      forecast_(forecast),
      sink_(std::move(sink)),
      objective_(cfg_.objective()) {
  std::sort(cfg_.pricing_table.begin(), cfg_.pricing_table.end());
  std::sort(cfg_.fleet_sizing_schedule.begin(), cfg_.fleet_sizing_schedule.end());
  states_.resize(fleet_.size());
  for (std::size_t i = 0; i < fleet_.size(); ++i) {
    if (fleet_[i].operator_id() != cfg_.id)
      throw ConsistencyError(fmt::format("vehicle {} belongs to operator {}, not {}", fleet_[i].id(),
                                         fleet_[i].operator_id(), cfg_.id));
    if (!index_.emplace(fleet_[i].id(), i).second)
      throw ValidationError(fmt::format("duplicate vehicle id {}", fleet_[i].id()));
    states_[i].plan.vehicle_id = fleet_[i].id();
  }
}

std::size_t FleetOperator::index_of(VehicleId id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw LookupError(fmt::format("operator {} has no vehicle {}", cfg_.id, id));
  return it->second;
}

Vehicle& FleetOperator::vehicle(VehicleId id) { return fleet_[index_of(id)]; }
const VehiclePlan& FleetOperator::plan_of(VehicleId id) const { return states_[index_of(id)].plan; }
const VehicleSnapshot& FleetOperator::snapshot_of(VehicleId id) const { return states_[index_of(id)].snapshot; }

const PlanRequest* FleetOperator::request(RequestId id) const {
  auto it = requests_.find(id);
  return it == requests_.end() ? nullptr : &it->second;
}

std::optional<TravelInfo> FleetOperator::direct_info(RequestId id) const {
  auto it = direct_.find(id);
  if (it == direct_.end()) return std::nullopt;
  return it->second;
}

bool FleetOperator::locked(std::size_t vi) const {
  return fleet_[vi].locked_in_stop() && !states_[vi].plan.stops.empty() && states_[vi].plan.stops.front().is_service();
}

bool FleetOperator::available_for_requests(std::size_t vi) const {
  return fleet_[vi].active() && !fleet_[vi].stranded();
}

VehiclePlan FleetOperator::planning_plan(std::size_t vi) const {
  VehiclePlan out;
  out.vehicle_id = fleet_[vi].id();
  const auto& stops = states_[vi].plan.stops;
  const std::size_t first = locked(vi) ? 1 : 0;
  for (std::size_t i = first; i < stops.size(); ++i)
    if (stops[i].is_service()) out.stops.push_back(stops[i]);
  return out;
}

void FleetOperator::set_plan(std::size_t vi, std::vector<PlanStop> stops) {
  auto& st = states_[vi];
  if (st.plan.stops == stops) return;
  st.plan.stops = std::move(stops);
  st.plan.schedule.clear();
  st.dirty = true;
}

namespace {

std::vector<PlanStop> with_prefix(const std::vector<PlanStop>& full, bool is_locked, std::vector<PlanStop> rest) {
  std::vector<PlanStop> out;
  if (is_locked && !full.empty()) out.push_back(full.front());
  out.insert(out.end(), std::make_move_iterator(rest.begin()), std::make_move_iterator(rest.end()));
  return out;
}

}  // namespace

void FleetOperator::prepare(Seconds t) {
  prepared_at_ = t;
  for (std::size_t vi = 0; vi < fleet_.size(); ++vi) {
    const Vehicle& v = fleet_[vi];
    VehicleSnapshot s;
    s.id = v.id();
    s.capacity = v.type().capacity;
    s.soc = v.soc();
    s.soc_per_m = v.type().soc_per_m();
    s.battery_kwh = v.type().battery_kwh;
    if (infra_ && cfg_.soc_threshold > 0.0 && s.tracks_energy()) {
      const double per_m = s.soc_per_m;
      s.end_reserve = [this, per_m](NodeId node) { return station_reach_m(node) * per_m; };
    }
    s.position = v.position();
    for (const auto& b : v.on_board()) s.on_board.emplace_back(b.request_id, b.group_size);
    if (locked(vi)) {
      const RouteLeg& leg = v.legs().front();
      const Millis avail = to_millis(v.available_at());
      s.available_time = avail;
      for (auto id : leg.alighting)
        s.on_board.erase(std::remove_if(s.on_board.begin(), s.on_board.end(), [&](const auto& p) { return p.first == id; }),
                         s.on_board.end());
      for (const auto& b : leg.boarding) {
        s.on_board.emplace_back(b.request_id, b.group_size);
        auto it = requests_.find(b.request_id);
        if (it != requests_.end()) {
          it->second.state = PlanRequestState::picked_up;
          it->second.pickup_departure = avail;
          it->second.vehicle = v.id();
        }
      }
    } else {
      s.available_time = to_millis(t);
    }
    states_[vi].snapshot = std::move(s);
  }
  mark_reservations(t);
  relax_limits();
}

void FleetOperator::mark_reservations(Seconds t) {
  const Millis now = to_millis(t);
  const Millis horizon = to_millis(cfg_.reservation_horizon);
  for (auto& [id, rq] : requests_) rq.batch_excluded = rq.reservation && rq.earliest_pickup - now > horizon;
}

void FleetOperator::relax_limits() {
  for (auto& [id, rq] : requests_) rq.reset_limits();
  TravelOracle oracle(router_, prepared_at_);
  for (std::size_t vi = 0; vi < fleet_.size(); ++vi) {
    auto& st = states_[vi];
    if (st.plan.stops.empty()) continue;
    const bool lk = locked(vi);
    std::vector<std::size_t> idx;
    std::vector<PlanStop> stops;
    for (std::size_t i = lk ? 1 : 0; i < st.plan.stops.size(); ++i) {
      if (!st.plan.stops[i].is_service()) continue;
      idx.push_back(i);
      stops.push_back(st.plan.stops[i]);
    }
    const auto sched = schedule_stops(st.snapshot, stops, oracle);
    std::map<RequestId, Millis> departures;
    for (std::size_t k = 0; k < sched.size(); ++k) {
      const auto& stop = stops[k];
      for (auto id : stop.alighting) {
        auto it = requests_.find(id);
        if (it == requests_.end() || !it->second.committed()) continue;
        auto& rq = it->second;
        Millis from = sched[k].arrival;
        if (auto d = departures.find(id); d != departures.end()) from = d->second;
        else if (rq.pickup_departure) from = *rq.pickup_departure;
        rq.ride_limit = std::max(rq.ride_limit, sched[k].arrival - from);
      }
      for (auto id : stop.boarding) {
        auto it = requests_.find(id);
        if (it == requests_.end()) continue;
        departures[id] = sched[k].departure;
        if (it->second.committed()) it->second.pickup_deadline = std::max(it->second.pickup_deadline, sched[k].start);
      }
      if (stop.kind == StopKind::charge && sched[k].departure > stop.latest_end) {
        // Arrival drifted past the booking window; execution cuts the charge
        // at the booking end, so the plan keeps it as is.
        st.plan.stops[idx[k]].latest_end = sched[k].departure;
      }
    }
    if (st.snapshot.tracks_energy()) {
      const auto plan = planning_plan(vi);
      const auto check = check_feasibility_and_cost(st.snapshot, plan.stops, requests_, oracle);
      st.snapshot.soc_floor = std::min(0.0, check.soc_margin);
    }
  }
}

double FleetOperator::station_reach_m(NodeId node) {
  if (auto it = station_reach_.find(node); it != station_reach_.end()) return it->second;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& station : infra_->stations()) {
    if (!station.accessible_by(cfg_.id) || station.sockets.empty()) continue;
    const auto c = router_.cost(Position::at_node(node), Position::at_node(station.node), prepared_at_);
    if (c.finite()) best = std::min(best, static_cast<double>(c.dist) / 1000.0);
  }
  if (std::isinf(best)) best = 0.0;
  station_reach_.emplace(node, best);
  return best;
}

PlanRequest FleetOperator::make_plan_request(const TravelerRequest& r, Seconds t) {
  PlanRequest p;
  p.id = r.id;
  p.origin = r.origin;
  p.destination = r.destination;
  p.group_size = r.group_size;
  p.request_time = to_millis(r.request_time);
  p.reservation = r.earliest_pickup && to_millis(*r.earliest_pickup) > to_millis(t);
  p.earliest_pickup = p.reservation ? to_millis(*r.earliest_pickup) : p.request_time;
  p.latest_pickup = std::max(p.request_time, p.earliest_pickup) + to_millis(cfg_.max_wait);
  const auto direct = router_.cost(r.origin, r.destination, t);
  p.direct_time = direct.time;
  p.direct_distance = direct.finite() ? static_cast<double>(direct.dist) / 1000.0 : 0.0;
  p.max_ride = direct.finite() ? static_cast<Millis>(std::llround((1.0 + cfg_.max_detour_rel) *
                                                                  static_cast<double>(direct.time)))
                               : 0;
  p.reset_limits();
  direct_[r.id] = TravelInfo::from_cost(direct);
  return p;
}

Offer FleetOperator::make_offer(const PlanRequest& rq, const PlannedService& s) const {
  Offer o;
  o.operator_id = cfg_.id;
  o.valid = true;
  o.expected_waiting_time = to_seconds(std::max<Millis>(0, s.pickup_start - rq.earliest_pickup));
  o.expected_travel_time = to_seconds(s.dropoff_arrival - s.pickup_departure);
  o.fare = fare_factor_ * (cfg_.base_fare + cfg_.fare_per_m * rq.direct_distance);
  return o;
}

Offer FleetOperator::user_request(const TravelerRequest& r, Seconds t) {
  if (prepared_at_ != t) prepare(t);
  PlanRequest p = make_plan_request(r, t);
  if (p.direct_time >= kInfiniteMillis) return Offer::rejection(cfg_.id);
  p.batch_excluded = p.reservation && p.earliest_pickup - to_millis(t) > to_millis(cfg_.reservation_horizon);
  requests_[p.id] = p;

  std::vector<VehicleSnapshot> snaps;
  std::vector<VehiclePlan> plans;
  for (std::size_t vi = 0; vi < fleet_.size(); ++vi) {
    if (!available_for_requests(vi)) continue;
    snaps.push_back(states_[vi].snapshot);
    plans.push_back(planning_plan(vi));
  }
  TravelOracle oracle(router_, t);
  auto cand = insertion_offer(requests_.at(p.id), snaps, plans, requests_, oracle, objective_);
  if (!cand) {
    requests_.erase(p.id);
    return Offer::rejection(cfg_.id);
  }
  const auto service = planned_service(cand->plan, p.id);
  if (!service) throw ConsistencyError(fmt::format("insertion plan for request {} has no schedule", p.id));
  auto& rq = requests_.at(p.id);
  rq.state = PlanRequestState::offered;
  rq.vehicle = cand->vehicle_id;
  const Offer offer = make_offer(rq, *service);
  pending_[p.id] = std::move(*cand);
  return offer;
}

void FleetOperator::register_request(const TravelerRequest& r, Seconds t) {
  PlanRequest p = make_plan_request(r, t);
  p.batch_excluded = p.reservation && p.earliest_pickup - to_millis(t) > to_millis(cfg_.reservation_horizon);
  requests_[p.id] = p;
  unanswered_.push_back(p.id);
}

std::vector<std::pair<RequestId, Offer>> FleetOperator::batch_offers(Seconds t) {
  if (prepared_at_ != t) prepare(t);
  std::vector<std::pair<RequestId, Offer>> answers;
  std::sort(unanswered_.begin(), unanswered_.end());
  std::vector<RequestId> batch_ids;
  TravelOracle oracle(router_, t);

  // Unreachable trips and far reservations never enter the batch.
  for (auto id : unanswered_) {
    auto& rq = requests_.at(id);
    if (rq.direct_time >= kInfiniteMillis) {
      answers.emplace_back(id, Offer::rejection(cfg_.id));
      requests_.erase(id);
      continue;
    }
    if (!rq.batch_excluded) {
      batch_ids.push_back(id);
      continue;
    }
    std::vector<VehicleSnapshot> snaps;
    std::vector<VehiclePlan> plans;
    for (std::size_t vi = 0; vi < fleet_.size(); ++vi) {
      if (!available_for_requests(vi)) continue;
      snaps.push_back(states_[vi].snapshot);
      plans.push_back(planning_plan(vi));
    }
    auto cand = insertion_offer(rq, snaps, plans, requests_, oracle, objective_);
    if (!cand) {
      answers.emplace_back(id, Offer::rejection(cfg_.id));
      requests_.erase(id);
      continue;
    }
    const auto service = planned_service(cand->plan, id);
    const std::size_t vi = index_of(cand->vehicle_id);
    set_plan(vi, with_prefix(states_[vi].plan.stops, locked(vi), cand->plan.stops));
    rq.state = PlanRequestState::offered;
    rq.vehicle = cand->vehicle_id;
    answers.emplace_back(id, make_offer(rq, *service));
  }
  unanswered_.clear();

  const auto plans = run_batch(t, batch_ids);
  for (auto id : batch_ids) {
    auto it = plans.find(id);
    if (it == plans.end()) {
      answers.emplace_back(id, Offer::rejection(cfg_.id));
      requests_.erase(id);
      continue;
    }
    auto& rq = requests_.at(id);
    rq.state = PlanRequestState::offered;
    answers.emplace_back(id, make_offer(rq, it->second));
  }
  std::sort(answers.begin(), answers.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  return answers;
}

std::map<RequestId, PlannedService> FleetOperator::run_batch(Seconds t, const std::vector<RequestId>& fresh) {
  ++counters_.batch_runs;
  TravelOracle oracle(router_, t);
  BatchInput input;
  std::vector<std::size_t> vis;
  for (std::size_t vi = 0; vi < fleet_.size(); ++vi) {
    if (!available_for_requests(vi)) continue;
    BatchVehicle bv;
    bv.snapshot = states_[vi].snapshot;
    bv.current = planning_plan(vi);
    for (const auto& stop : bv.current.stops) {
      if (stop.kind == StopKind::charge) bv.fixed_stops.push_back(stop);
      for (auto id : stop.boarding) {
        const auto& rq = requests_.at(id);
        const bool movable = cfg_.reassignment && !rq.batch_excluded && rq.state == PlanRequestState::booked;
        if (movable) {
          input.pool.push_back(id);
          input.must_serve.push_back(id);
        } else {
          bv.pinned.push_back(id);
        }
      }
    }
    input.vehicles.push_back(std::move(bv));
    vis.push_back(vi);
  }
  for (auto id : fresh) input.pool.push_back(id);

  std::map<RequestId, PlannedService> services;
  if (input.vehicles.empty()) return services;
  auto result = batch_optimize(input, requests_, oracle, objective_, cfg_.batch);
  counters_.last_batch_optimal = result.optimal;
  spdlog::debug("operator {}: batch at t={} pool {} candidates {} optimal {}", cfg_.id, t, input.pool.size(),
                result.candidate_plans, result.optimal);

  const std::set<RequestId> unassigned(result.unassigned.begin(), result.unassigned.end());
  for (auto id : input.must_serve) {
    if (unassigned.count(id)) {
      spdlog::warn("operator {}: batch at t={} dropped booked request {}; keeping current plans", cfg_.id, t, id);
      return services;
    }
  }

  for (std::size_t k = 0; k < vis.size(); ++k) {
    const std::size_t vi = vis[k];
    auto& plan = result.plans[k];
    for (auto id : plan.pickups()) {
      auto it = requests_.find(id);
      if (it == requests_.end()) continue;
      it->second.vehicle = fleet_[vi].id();
      if (std::find(fresh.begin(), fresh.end(), id) != fresh.end())
        if (auto s = planned_service(plan, id)) services[id] = *s;
    }
    if (plan.stops == input.vehicles[k].current.stops) continue;
    set_plan(vi, with_prefix(states_[vi].plan.stops, locked(vi), plan.stops));
  }
  return services;
}

void FleetOperator::lock_booking(RequestId id, Seconds) {
  auto it = requests_.find(id);
  if (it == requests_.end()) throw LookupError(fmt::format("operator {}: unknown request {}", cfg_.id, id));
  if (auto p = pending_.find(id); p != pending_.end()) {
    const std::size_t vi = index_of(p->second.vehicle_id);
    set_plan(vi, with_prefix(states_[vi].plan.stops, locked(vi), p->second.plan.stops));
    it->second.vehicle = p->second.vehicle_id;
    pending_.erase(p);
  }
  if (!it->second.vehicle) throw ConsistencyError(fmt::format("request {} booked without a vehicle", id));
  it->second.state = PlanRequestState::booked;
}

void FleetOperator::remove_request(RequestId id, Seconds) {
  pending_.erase(id);
  unanswered_.erase(std::remove(unanswered_.begin(), unanswered_.end(), id), unanswered_.end());
  auto it = requests_.find(id);
  if (it == requests_.end()) return;
  if (it->second.state == PlanRequestState::picked_up)
    throw ConsistencyError(fmt::format("request {} is on board and cannot be removed", id));
  if (it->second.vehicle) {
    const std::size_t vi = index_of(*it->second.vehicle);
    std::vector<PlanStop> stops;
    for (const auto& s : states_[vi].plan.stops) {
      const bool mine = std::find(s.boarding.begin(), s.boarding.end(), id) != s.boarding.end() ||
                        std::find(s.alighting.begin(), s.alighting.end(), id) != s.alighting.end();
      if (!mine) stops.push_back(s);
    }
    set_plan(vi, std::move(stops));
  }
  requests_.erase(it);
  direct_.erase(id);
}

void FleetOperator::reoptimize(Seconds t) {
  if (prepared_at_ != t) prepare(t);
  run_batch(t, {});
}

std::vector<RepositionMove> FleetOperator::run_repositioning(Seconds t) {
  if (!zones_ || !forecast_ || zones_->empty()) return {};
  if (prepared_at_ != t) prepare(t);
  ++counters_.repositioning_runs;
  std::vector<IdleVehicle> idle;
  for (std::size_t vi = 0; vi < fleet_.size(); ++vi) {
    const Vehicle& v = fleet_[vi];
    if (!available_for_requests(vi) || !states_[vi].plan.stops.empty() || !v.idle() || !v.position().is_node() ||
        v.occupancy() > 0)
      continue;
    idle.push_back({v.id(), v.position().start_node});
  }
  TravelOracle oracle(router_, t);
  auto moves = reposition(*zones_, *forecast_, idle, t, cfg_.repo_horizon, oracle);
  for (const auto& m : moves) {
    PlanStop stop;
    stop.kind = StopKind::reposition;
    stop.node = m.target;
    set_plan(index_of(m.vehicle_id), {stop});
  }
  counters_.repositioning_moves += moves.size();
  return moves;
}

std::size_t FleetOperator::run_charging(Seconds t) {
  if (!infra_ || cfg_.soc_threshold <= 0.0) return 0;
  if (prepared_at_ != t) prepare(t);
  TravelOracle oracle(router_, t);
  std::size_t booked = 0;
  for (std::size_t vi = 0; vi < fleet_.size(); ++vi) {
    const Vehicle& v = fleet_[vi];
    if (!available_for_requests(vi)) continue;
    const auto& full = states_[vi].plan.stops;
    if (std::any_of(full.begin(), full.end(), [](const PlanStop& s) { return s.kind == StopKind::charge; })) continue;
    const auto& snap = states_[vi].snapshot;
    const auto plan = planning_plan(vi);
    // State of charge when the current commitments are done.
    double soc = v.soc();
    Position pos = snap.position;
    Millis end = snap.available_time;
    const auto sched = schedule_stops(snap, plan.stops, oracle);
    if (sched.size() != plan.stops.size()) continue;
    for (std::size_t k = 0; k < plan.stops.size(); ++k) {
      soc -= static_cast<double>(oracle.cost(pos, plan.stops[k].node).dist) / 1000.0 * snap.soc_per_m;
      pos = Position::at_node(plan.stops[k].node);
      end = sched[k].departure;
    }
    if (soc >= cfg_.soc_threshold) continue;
    const auto options = infra_->query_charging_options(router_, pos, to_seconds(end), std::max(0.0, soc), v.type(),
                                                        cfg_.id, t, cfg_.charging_candidates);
    std::optional<Booking> booking;
    for (const auto& opt : options) {
      if (opt.est_charge_duration <= 0.0) continue;
      try {
        booking = infra_->book(opt.token);
        break;
      } catch (const BookingConflictError& e) {
        spdlog::debug("operator {}: vehicle {} booking conflict at station {}: {}", cfg_.id, v.id(), opt.station_id,
                      e.what());
      }
    }
    if (!booking) continue;
    PlanStop stop;
    stop.kind = StopKind::charge;
    stop.node = infra_->station(booking->station_id).node;
    stop.booking = booking->booking_id;
    stop.power_kw = options.front().power_kw;
    for (const auto& opt : options)
      if (opt.station_id == booking->station_id && opt.socket_id == booking->socket_id) stop.power_kw = opt.power_kw;
    stop.earliest_start = to_millis(booking->start_time);
    stop.latest_end = to_millis(booking->expected_end_time);
    stop.duration = stop.latest_end - stop.earliest_start;
    auto stops = full;
    // Waypoints are dropped; the charge follows the service stops.
    stops.erase(std::remove_if(stops.begin(), stops.end(), [](const PlanStop& s) { return !s.is_service(); }),
                stops.end());
    stops.push_back(stop);
    set_plan(vi, std::move(stops));
    ++booked;
  }
  counters_.charging_bookings += booked;
  return booked;
}

double FleetOperator::utilization() const {
  int active = 0;
  int busy = 0;
  for (std::size_t vi = 0; vi < fleet_.size(); ++vi) {
    const Vehicle& v = fleet_[vi];
    if (!v.active()) continue;
    ++active;
    const auto& stops = states_[vi].plan.stops;
    const bool serving = std::any_of(stops.begin(), stops.end(), [](const PlanStop& s) { return s.is_service(); });
    if (serving || v.occupancy() > 0) ++busy;
  }
  return active == 0 ? 0.0 : static_cast<double>(busy) / active;
}

SizingDecision FleetOperator::run_fleet_sizing(Seconds t) {
  SizingDecision out;
  if (cfg_.fleet_sizing_mode == FleetSizingMode::none) return out;
  if (prepared_at_ != t) prepare(t);
  ++counters_.fleet_sizing_runs;
  int active = 0;
  int busy = 0;
  for (std::size_t vi = 0; vi < fleet_.size(); ++vi) {
    if (!fleet_[vi].active()) continue;
    ++active;
    const auto& stops = states_[vi].plan.stops;
    if (fleet_[vi].occupancy() > 0 ||
        std::any_of(stops.begin(), stops.end(), [](const PlanStop& s) { return s.is_service(); }))
      ++busy;
  }

  int target = active;
  if (cfg_.fleet_sizing_mode == FleetSizingMode::schedule) {
    bool any = false;
    for (const auto& [start, n] : cfg_.fleet_sizing_schedule) {
      if (start > t) break;
      target = n;
      any = true;
    }
    if (!any) return out;
  } else {
    const double u = active == 0 ? 1.0 : static_cast<double>(busy) / active;
    const double goal = std::max(cfg_.fleet_sizing_target, 1e-9);
    const int needed = std::max(1, static_cast<int>(std::ceil(static_cast<double>(busy) / goal - 1e-9)));
    if (u > cfg_.fleet_sizing_target + cfg_.fleet_sizing_band) target = std::max(active + 1, needed);
    else if (u < cfg_.fleet_sizing_target - cfg_.fleet_sizing_band) target = std::min(active - 1, needed);
    target = std::max(target, 1);
  }

  if (target > active) {
    for (std::size_t vi = 0; vi < fleet_.size() && active < target; ++vi) {
      Vehicle& v = fleet_[vi];
      if (v.active() || v.stranded()) continue;
      v.set_active(true);
      if (infra_) infra_->release_parking(v.id(), cfg_.id);
      auto stops = states_[vi].plan.stops;
      stops.erase(std::remove_if(stops.begin(), stops.end(), [](const PlanStop& s) { return s.kind == StopKind::depot; }),
                  stops.end());
      set_plan(vi, std::move(stops));
      out.activate.push_back(v.id());
      ++active;
    }
  } else if (target < active && infra_) {
    for (std::size_t vi = 0; vi < fleet_.size() && active > target; ++vi) {
      Vehicle& v = fleet_[vi];
      const auto& stops = states_[vi].plan.stops;
      const bool serving = std::any_of(stops.begin(), stops.end(), [](const PlanStop& s) { return s.is_service(); });
      if (!v.active() || serving || v.occupancy() > 0 || locked(vi)) continue;
      if (std::any_of(requests_.begin(), requests_.end(),
                      [&](const auto& kv) { return kv.second.vehicle == v.id() && kv.second.state != PlanRequestState::unassigned; }))
        continue;
      const auto depot = infra_->nearest_free_depot(router_, v.position(), cfg_.id, t);
      if (!depot) break;
      infra_->reserve_parking(*depot, v.id(), cfg_.id);
      v.set_active(false);
      PlanStop stop;
      stop.kind = StopKind::depot;
      stop.node = infra_->station(*depot).node;
      set_plan(vi, {stop});
      out.deactivate.push_back(v.id());
      --active;
    }
  }
  return out;
}

double FleetOperator::update_pricing(Seconds t) {
  switch (cfg_.pricing_mode) {
    case PricingMode::none: fare_factor_ = 1.0; break;
    case PricingMode::time: fare_factor_ = time_fare_factor(cfg_.pricing_table, t); break;
    case PricingMode::utilization:
      fare_factor_ = utilization_fare_factor(cfg_.pricing_alpha, utilization(), cfg_.pricing_u_ref);
      break;
  }
  return fare_factor_;
}

void FleetOperator::apply_plans(Seconds t) {
  const Network& net = router_.network();
  for (std::size_t vi = 0; vi < fleet_.size(); ++vi) {
    auto& st = states_[vi];
    Vehicle& v = fleet_[vi];
    if (v.stranded()) {
      st.dirty = false;
      continue;
    }
    const bool lk = locked(vi);
    if (!lk) {
      // Waypoints the vehicle already stands on are done.
      while (!st.plan.stops.empty() && !st.plan.stops.front().is_service() && v.position().is_node() &&
             st.plan.stops.front().node == v.position().start_node) {
        st.plan.stops.erase(st.plan.stops.begin());
        st.dirty = true;
      }
    }
    if (!st.dirty) continue;
    st.dirty = false;

    std::vector<RouteLeg> legs;
    Position pos = v.position();
    std::size_t first = 0;
    if (lk) {
      pos = Position::at_node(st.plan.stops.front().node);
      first = 1;
    }
    for (std::size_t k = first; k < st.plan.stops.size(); ++k) {
      const auto& stop = st.plan.stops[k];
      const bool at_stop = pos.is_node() && pos.start_node == stop.node;
      if (!at_stop) {
        auto route = router_.route(pos, Position::at_node(stop.node), t);
        if (!route) throw ConsistencyError(fmt::format("vehicle {}: no route to node {}", v.id(), stop.node));
        if (!pos.is_node()) route->nodes.insert(route->nodes.begin(), pos.start_node);
        LegKind kind = LegKind::drive;
        if (stop.kind == StopKind::reposition) kind = LegKind::reposition_drive;
        if (stop.kind == StopKind::depot) kind = LegKind::to_depot;
        legs.push_back(RouteLeg::drive(std::move(*route), kind));
        pos = Position::at_node(stop.node);
      }
      if (stop.kind == StopKind::board) {
        std::vector<Boarding> boarding;
        for (auto id : stop.boarding) boarding.push_back({id, requests_.at(id).group_size});
        legs.push_back(RouteLeg::stop(stop.node, stop.alighting, std::move(boarding), to_seconds(stop.earliest_start),
                                      to_seconds(stop.duration)));
      } else if (stop.kind == StopKind::charge) {
        const Booking& b = infra_->booking(*stop.booking);
        legs.push_back(RouteLeg::charge(stop.node, b.booking_id, stop.power_kw, b.start_time,
                                        b.expected_end_time - b.start_time, b.expected_end_time));
      }
    }
    if (legs.empty() && !pos.is_node()) {
      // Finish the edge being driven; a vehicle cannot stop mid-edge.
      legs.push_back(RouteLeg::drive(Route{{pos.start_node, *pos.end_node}}));
    }
    auto cut = v.assign_legs(std::move(legs), net);
    if (sink_)
      for (const auto& r : cut) sink_(r);
  }
}

void FleetOperator::on_pickup(const Vehicle& v, RequestId id, Seconds t) {
  auto it = requests_.find(id);
  if (it == requests_.end()) throw ConsistencyError(fmt::format("operator {}: pickup of unknown request {}", cfg_.id, id));
  it->second.state = PlanRequestState::picked_up;
  it->second.pickup_departure = to_millis(t);
  it->second.vehicle = v.id();
}

void FleetOperator::on_dropoff(const Vehicle&, RequestId id, Seconds) {
  auto it = requests_.find(id);
  if (it == requests_.end()) throw ConsistencyError(fmt::format("operator {}: dropoff of unknown request {}", cfg_.id, id));
  requests_.erase(it);
  direct_.erase(id);
}

void FleetOperator::on_leg_complete(const Vehicle& v, const LegRecord& record) {
  const std::size_t vi = index_of(v.id());
  auto& stops = states_[vi].plan.stops;
  switch (record.kind) {
    case LegKind::board:
    case LegKind::charge: {
      if (stops.empty() || !stops.front().is_service() || !record.end_position.is_node() ||
          stops.front().node != record.end_position.start_node)
        throw ConsistencyError(fmt::format("vehicle {}: completed {} leg does not match its plan", v.id(),
                                           to_string(record.kind)));
      stops.erase(stops.begin());
      if (record.kind == LegKind::charge && record.booking && infra_) {
        infra_->release(*record.booking, record.end_time);
        infra_->record_delivery(*record.booking, record.energy_charged_kwh);
      }
      break;
    }
    case LegKind::reposition_drive:
    case LegKind::to_depot:
      if (!stops.empty() && !stops.front().is_service() && record.end_position.is_node() &&
          stops.front().node == record.end_position.start_node)
        stops.erase(stops.begin());
      break;
    case LegKind::drive: break;
  }
  states_[vi].plan.schedule.clear();
}

OperatorStats FleetOperator::stats() const {
  OperatorStats s = counters_;
  s.active_vehicles = 0;
  s.busy_vehicles = 0;
  for (std::size_t vi = 0; vi < fleet_.size(); ++vi) {
    if (!fleet_[vi].active()) continue;
    ++s.active_vehicles;
    const auto& stops = states_[vi].plan.stops;
    if (fleet_[vi].occupancy() > 0 ||
        std::any_of(stops.begin(), stops.end(), [](const PlanStop& x) { return x.is_service(); }))
      ++s.busy_vehicles;
  }
  s.utilization = utilization();
  s.fare_factor = fare_factor_;
  s.open_requests = static_cast<int>(requests_.size());
  return s;
}

}  // namespace fleetsim
