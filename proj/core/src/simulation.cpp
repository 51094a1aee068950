#include "fleetsim/simulation.h"

#include <algorithm>
#include <chrono>
#include <cmath>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace fleetsim {

ScenarioData load_scenario_data(const ScenarioConfig& cfg) {
  ScenarioData d;
  TravelTimeSources tt;
  tt.factors_file = cfg.tt_factors_file;
  tt.edge_table_file = cfg.tt_edge_table_file;
  d.network = load_network(cfg.nodes_file, cfg.edges_file, tt);
  d.demand = load_demand(cfg.demand_file, d.network, cfg.default_behavior);
  if (cfg.vehicle_types_file) {
    d.vehicle_types = load_vehicle_types(*cfg.vehicle_types_file);
  } else {
    d.vehicle_types = {cfg.default_vehicle_type};
  }
  d.fleet = cfg.fleet_file ? load_initial_fleet(*cfg.fleet_file, d.network) : generate_fleet(cfg, d.network);
  if (cfg.stations_file) d.stations = load_stations(*cfg.stations_file, d.network);
  if (cfg.zone_nodes_file || cfg.zone_centroids_file) {
    if (!cfg.zone_nodes_file || !cfg.zone_centroids_file)
      throw ConfigError("<config>", "zone_nodes_file", "zone_nodes_file and zone_centroids_file go together");
    d.zones = load_zones(*cfg.zone_nodes_file, *cfg.zone_centroids_file, d.network);
    if (cfg.forecast_file) {
      d.forecast = load_forecast(*cfg.forecast_file, cfg.forecast_bin);
    } else {
      std::vector<ForecastInput> in;
      in.reserve(d.demand.size());
      for (const auto& r : d.demand) in.push_back({r.request_time, r.origin});
      d.forecast = perfect_forecast(in, *d.zones, cfg.forecast_bin);
    }
  }
  return d;
}

std::vector<InitialVehicle> generate_fleet(const ScenarioConfig& cfg, const Network& net) {
  std::vector<InitialVehicle> out;
  const auto n = static_cast<long long>(net.node_count());
  if (n == 0) return out;
  VehicleId next = 0;
  for (const auto& op : cfg.operators) {
    for (int i = 0; i < op.fleet_size; ++i) {
      InitialVehicle v;
      v.vehicle_id = next++;
      v.type_id = cfg.vehicle_type;
      v.start_node = static_cast<NodeId>((static_cast<long long>(i) * n / std::max(1, op.fleet_size) + op.id) % n);
      v.soc = cfg.initial_soc;
      v.operator_id = op.id;
      out.push_back(v);
    }
  }
  return out;
}

/// Routes execution callbacks to the demand, the owning operator and the
/// record streams.
class Simulation::Bridge : public VehicleObserver {
 public:
  explicit Bridge(Simulation& sim) : sim_(sim) {}

  void on_board(const Vehicle& v, RequestId id, Seconds stop_start, Seconds t) override {
    auto& r = sim_.demand_.get(id);
    r.transition(RequestState::on_board);
    r.pickup_time = stop_start;
    r.pickup_node = v.position().start_node;
    r.vehicle = v.id();
    sim_.op(v.operator_id()).on_pickup(v, id, t);
  }

  void on_alight(const Vehicle& v, RequestId id, Seconds stop_start, Seconds t) override {
    auto& r = sim_.demand_.get(id);
    r.transition(RequestState::finished);
    r.dropoff_time = stop_start;
    r.dropoff_node = v.position().start_node;
    sim_.op(v.operator_id()).on_dropoff(v, id, t);
    sim_.write_user(r);
  }

  void on_leg_complete(const Vehicle& v, const LegRecord& rec) override {
    sim_.op(v.operator_id()).on_leg_complete(v, rec);
  }

  void on_stranded(const Vehicle& v, Seconds t) override {
    spdlog::warn("vehicle {} of operator {} ran out of energy at t={}", v.id(), v.operator_id(), t);
  }

 private:
  Simulation& sim_;
};

Simulation::Simulation(ScenarioConfig config, ScenarioData data, std::optional<std::filesystem::path> output_dir)
    : cfg_(std::move(config)), data_(std::move(data)) {
  cfg_.validate(cfg_.scenario_name);
  out_dir_ = output_dir ? *output_dir : cfg_.output_dir / cfg_.scenario_name;

  RouterOptions ro;
  ro.kind = cfg_.routing_backend;
  ro.with_store = cfg_.routing_store;
  ro.hubs = cfg_.routing_hubs;
  router_ = std::make_unique<Router>(data_.network, ro);
  infra_ = std::make_unique<Infrastructure>(data_.stations);
  demand_ = Demand(data_.demand);

  std::map<std::string, VehicleType> types;
  for (const auto& t : data_.vehicle_types) types[t.type_id] = t;
  for (std::size_t i = 0; i < cfg_.operators.size(); ++i) fleets_.emplace_back();
  std::set<VehicleId> ids;
  for (const auto& iv : data_.fleet) {
    if (iv.operator_id < 0 || static_cast<std::size_t>(iv.operator_id) >= cfg_.operators.size())
      throw StructuralError(fmt::format("vehicle {} refers to unknown operator {}", iv.vehicle_id, iv.operator_id));
    auto it = types.find(iv.type_id);
    if (it == types.end())
      throw StructuralError(fmt::format("vehicle {} refers to unknown vehicle type '{}'", iv.vehicle_id, iv.type_id));
    if (!ids.insert(iv.vehicle_id).second) throw ValidationError(fmt::format("duplicate vehicle id {}", iv.vehicle_id));
    fleets_[static_cast<std::size_t>(iv.operator_id)].emplace_back(iv.vehicle_id, iv.operator_id, it->second,
                                                                     Position::at_node(iv.start_node), iv.soc);
    capacity_[{iv.operator_id, iv.vehicle_id}] = it->second.capacity;
  }

  bridge_ = std::make_unique<Bridge>(*this);
  writer_ = std::make_unique<RecordWriter>(out_dir_, cfg_.record_flush_interval);
  for (std::size_t i = 0; i < cfg_.operators.size(); ++i) {
    auto& fleet = fleets_[i];
    std::sort(fleet.begin(), fleet.end(), [](const Vehicle& a, const Vehicle& b) { return a.id() < b.id(); });
    operators_.push_back(std::make_unique<FleetOperator>(
        cfg_.operators[i], fleet, *router_, infra_.get(), data_.zones ? &*data_.zones : nullptr,
        data_.forecast ? &*data_.forecast : nullptr, [this](const LegRecord& r) { write_leg(r); }));
  }
  triggers_.assign(operators_.size(), {});
  steps_ = static_cast<std::size_t>(std::floor((cfg_.end_time - cfg_.start_time) / cfg_.time_step + 1e-9));
  now_ = cfg_.start_time;
}

Simulation::~Simulation() = default;

bool Simulation::period_hit(std::size_t k, Seconds period) const {
  if (k == 0 || period <= 0.0) return false;
  const double elapsed = static_cast<double>(k) * cfg_.time_step;
  const double q = elapsed / period;
  return std::abs(q - std::round(q)) < 1e-9;
}

void Simulation::write_user(const TravelerRequest& r) {
  if (!written_.insert(r.id).second) return;
  writer_->user(record_user_outcome(r));
}

void Simulation::write_leg(const LegRecord& r) {
  auto it = capacity_.find({r.operator_id, r.vehicle_id});
  writer_->leg(r, it == capacity_.end() ? 0 : it->second);
}

void Simulation::decide(RequestId id, const std::vector<Offer>& offers, Seconds t) {
  auto& r = demand_.get(id);
  const bool any_valid = std::any_of(offers.begin(), offers.end(), [](const Offer& o) { return o.valid; });
  if (!any_valid) {
    r.transition(RequestState::rejected_by_operator);
    for (auto& o : operators_) o->remove_request(id, t);
    write_user(r);
    return;
  }
  r.transition(RequestState::offer_received);
  const Offer* best = nullptr;
  for (const auto& o : offers) {
    if (!o.valid) continue;
    if (!best || o.expected_waiting_time < best->expected_waiting_time ||
        (o.expected_waiting_time == best->expected_waiting_time && o.operator_id < best->operator_id))
      best = &o;
  }
  r.offer = *best;
  const Decision d = choose_offer(r, offers, cfg_.random_seed);
  if (!d.accepted) {
    r.transition(RequestState::declined_by_user);
    for (auto& o : operators_) o->remove_request(id, t);
    write_user(r);
    return;
  }
  for (const auto& o : offers)
    if (o.valid && o.operator_id == d.operator_id) r.offer = o;
  r.transition(RequestState::booked);
  r.serving_operator = d.operator_id;
  for (auto& o : operators_) {
    if (o->id() == d.operator_id) {
      o->lock_booking(id, t);
      if (const auto* pr = o->request(id)) r.vehicle = pr->vehicle;
    } else {
      o->remove_request(id, t);
    }
  }
}

void Simulation::handle_ids(const std::vector<RequestId>& revealed, Seconds t, std::vector<TimeStatsRow>& rows) {
  for (auto id : revealed) {
    auto& r = demand_.get(id);
    std::vector<Offer> offers;
    for (std::size_t i = 0; i < operators_.size(); ++i) {
      offers.push_back(operators_[i]->user_request(r, t));
      if (offers.back().valid) ++rows[i].offers;
      else ++rows[i].rejections;
    }
    decide(id, offers, t);
  }
}

void Simulation::handle_bos(const std::vector<RequestId>& revealed, Seconds t, std::size_t k,
                            std::vector<TimeStatsRow>& rows) {
  for (auto id : revealed) {
    const auto& r = demand_.get(id);
    for (auto& o : operators_) o->register_request(r, t);
    collecting_[id].assign(operators_.size(), std::nullopt);
  }
  bool any = false;
  for (std::size_t i = 0; i < operators_.size(); ++i) {
    const Seconds period = operators_[i]->config().batch_period;
    if (!(k == 0 || period_hit(k, period))) continue;
    any = true;
    ++triggers_[i].batch;
    for (auto& [id, offer] : operators_[i]->batch_offers(t)) {
      auto it = collecting_.find(id);
      if (it == collecting_.end()) continue;
      it->second[i] = offer;
      if (offer.valid) ++rows[i].offers;
      else ++rows[i].rejections;
    }
  }
  if (!any) return;
  // Decision phase for every traveler with answers from all operators.
  std::vector<RequestId> ready;
  for (const auto& [id, offers] : collecting_)
    if (std::all_of(offers.begin(), offers.end(), [](const auto& o) { return o.has_value(); })) ready.push_back(id);
  for (auto id : ready) {
    std::vector<Offer> offers;
    for (const auto& o : collecting_[id]) offers.push_back(*o);
    collecting_.erase(id);
    decide(id, offers, t);
  }
}

void Simulation::run_triggers(Seconds t, std::size_t k) {
  for (std::size_t i = 0; i < operators_.size(); ++i) {
    auto& o = *operators_[i];
    const auto& c = o.config();
    if (cfg_.sim_flow == SimFlow::ids && period_hit(k, c.batch_period)) {
      o.reoptimize(t);
      ++triggers_[i].batch;
    }
    if (period_hit(k, c.repo_period)) {
      o.run_repositioning(t);
      ++triggers_[i].repositioning;
    }
    o.run_charging(t);
    if (c.fleet_sizing_mode != FleetSizingMode::none && period_hit(k, c.fleet_sizing_period)) {
      o.run_fleet_sizing(t);
      ++triggers_[i].fleet_sizing;
    }
    o.update_pricing(t);
  }
}

void Simulation::step() {
  if (done()) throw ConsistencyError("simulation already reached its end time");
  using clock = std::chrono::steady_clock;
  const std::size_t k = next_step_++;
  const Seconds t = cfg_.start_time + static_cast<double>(k) * cfg_.time_step;
  const Seconds t_prev = k == 0 ? -std::numeric_limits<double>::infinity() : now_;
  ComputeTimesRow ct;
  ct.time = t;

  auto t0 = clock::now();
  if (k > 0) {
    for (auto& fleet : fleets_)
      for (auto& v : fleet)
        for (const auto& rec : v.update(now_, t, data_.network, bridge_.get())) write_leg(rec);
  }
  now_ = t;
  auto t1 = clock::now();

  const auto revealed = demand_.reveal(t_prev, t);
  for (auto id : revealed) {
    auto& r = demand_.get(id);
    const auto info = router_->travel_info(r.origin, r.destination, t);
    r.direct_travel_time = info.reachable() ? info.travel_time : 0.0;
    r.direct_distance = info.reachable() ? info.distance : 0.0;
  }
  std::vector<TimeStatsRow> rows(operators_.size());
  for (std::size_t i = 0; i < operators_.size(); ++i) {
    operators_[i]->prepare(t);
    rows[i].revealed = static_cast<int>(revealed.size());
  }
  if (cfg_.sim_flow == SimFlow::ids) handle_ids(revealed, t, rows);
  else handle_bos(revealed, t, k, rows);
  auto t2 = clock::now();

  run_triggers(t, k);
  auto t3 = clock::now();
  for (auto& o : operators_) o->apply_plans(t);
  auto t4 = clock::now();

  const double velocity = data_.network.average_velocity(t);
  for (std::size_t i = 0; i < operators_.size(); ++i) {
    const auto s = operators_[i]->stats();
    auto& row = rows[i];
    row.time = t;
    row.operator_id = operators_[i]->id();
    row.active_vehicles = s.active_vehicles;
    row.busy_vehicles = s.busy_vehicles;
    row.open_requests = s.open_requests;
    row.utilization = s.utilization;
    row.fare_factor = s.fare_factor;
    row.network_velocity = velocity;
    writer_->time(row);
  }
  const auto secs = [](auto a, auto b) { return std::chrono::duration<double>(b - a).count(); };
  ct.update = secs(t0, t1);
  ct.requests = secs(t1, t2);
  ct.triggers = secs(t2, t3);
  ct.apply = secs(t3, t4);
  writer_->compute(ct);
  writer_->tick(t);
}

SimulationResult Simulation::finish() {
  if (finished_) throw ConsistencyError("simulation already finished");
  finished_ = true;
  SimulationResult res;
  res.output_dir = out_dir_;
  res.steps = next_step_;
  for (auto& fleet : fleets_) {
    std::vector<LegRecord> cut;
    auto states = finalize_vehicles(fleet, now_, &cut);
    for (const auto& r : cut) write_leg(r);
    res.final_states.insert(res.final_states.end(), states.begin(), states.end());
  }
  demand_.finalize(now_);
  for (const auto& r : demand_.requests()) {
    if (r.state == RequestState::pending) continue;
    write_user(r);
  }
  writer_->final_states(res.final_states);
  writer_->close();
  res.kpi = evaluate(out_dir_);
  write_standard_eval(res.kpi, out_dir_);
  res.triggers = triggers_;
  res.booking_log = infra_->booking_log();
  return res;
}

SimulationResult Simulation::run() {
  while (!done()) step();
  return finish();
}

SimulationResult run_scenario(const ScenarioConfig& config) {
  auto data = load_scenario_data(config);
  Simulation sim(config, std::move(data));
  return sim.run();
}

}  // namespace fleetsim
