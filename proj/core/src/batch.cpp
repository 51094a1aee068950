#include "fleetsim/batch.h"

#include <algorithm>
#include <map>
#include <set>

#include <fmt/format.h>

namespace fleetsim {

namespace {

class OrderingSearch {
 public:
  OrderingSearch(const BatchVehicle& vehicle, std::span<const RequestId> extra, const RequestTable& requests,
                 TravelOracle& oracle, const ControlObjective& objective, std::uint64_t node_limit)
      : v_(vehicle), requests_(requests), oracle_(oracle), objective_(objective), limit_(node_limit) {
    const auto& snap = v_.snapshot;
    for (const auto& [id, g] : snap.on_board) {
      items_.push_back({id, g, true, false, std::nullopt});
    }
    auto add = [&](RequestId id) {
      if (snap.has_on_board(id)) return;
      for (const auto& it : items_)
        if (it.id == id) return;
      const auto& rq = lookup(id);
      items_.push_back({id, rq.group_size, false, false, std::nullopt});
    };
    for (auto id : v_.pinned) add(id);
    for (auto id : extra) add(id);
    fixed_done_.assign(v_.fixed_stops.size(), 0);
    seats_ = snap.occupancy();
    total_events_ = v_.fixed_stops.size();
    for (const auto& it : items_) total_events_ += it.loaded ? 1 : 2;
  }

  std::optional<std::vector<PlanStop>> run() {
    if (seats_ > v_.snapshot.capacity) return std::nullopt;
    dfs(v_.snapshot.available_time, v_.snapshot.position, v_.snapshot.soc);
    if (!found_) return std::nullopt;
    return best_;
  }

 private:
  struct Item {
    RequestId id;
    int group;
    bool loaded;
    bool done;
    std::optional<Millis> departure;
  };

  const PlanRequest& lookup(RequestId id) const {
    auto it = requests_.find(id);
    if (it == requests_.end()) throw LookupError(fmt::format("plan request {} is unknown", id));
    return it->second;
  }

  // State of charge on arrival at `to`, or nothing when it runs too low.
  std::optional<double> drive(const Position& from, NodeId to, double soc) {
    if (!energy_) return soc;
    soc -= static_cast<double>(oracle_.cost(from, to).dist) / 1000.0 * v_.snapshot.soc_per_m;
    if (soc < v_.snapshot.soc_floor - 1e-12) return std::nullopt;
    return soc;
  }

  void dfs(Millis time, const Position& pos, double soc) {
    if (++nodes_ > limit_) return;
    if (path_.size() == total_events_) {
      if (energy_ && !path_.empty() && v_.snapshot.end_reserve &&
          soc - v_.snapshot.end_reserve(path_.back().node) < v_.snapshot.soc_floor - 1e-12)
        return;
      const Millis cost = path_.empty() ? 0 : time - v_.snapshot.available_time;
      if (!found_ || cost < best_cost_) {
        best_cost_ = cost;
        best_ = path_;
        found_ = true;
      }
      return;
    }
    const Millis avail = v_.snapshot.available_time;
    for (std::size_t k = 0; k < items_.size(); ++k) {
      auto& it = items_[k];
      if (it.done) continue;
      const auto& rq = lookup(it.id);
      if (!it.loaded) {
        PlanStop stop = PlanStop::pickup(rq, objective_.boarding_duration);
        const Millis tt = oracle_.time(pos, stop.node);
        if (tt >= kInfiniteMillis) continue;
        const Millis start = std::max(time + tt, stop.earliest_start);
        const Millis dep = start + stop.duration;
        if (start > rq.pickup_deadline || start < rq.earliest_pickup) continue;
        if (seats_ + it.group > v_.snapshot.capacity) continue;
        if (found_ && dep - avail >= best_cost_) continue;
        const auto left = drive(pos, stop.node, soc);
        if (!left) continue;
        it.loaded = true;
        it.departure = dep;
        seats_ += it.group;
        path_.push_back(std::move(stop));
        dfs(dep, Position::at_node(rq.origin), *left);
        path_.pop_back();
        seats_ -= it.group;
        it.departure.reset();
        it.loaded = false;
      } else {
        PlanStop stop = PlanStop::dropoff(rq, objective_.boarding_duration);
        const Millis tt = oracle_.time(pos, stop.node);
        if (tt >= kInfiniteMillis) continue;
        const Millis arrival = time + tt;
        const Millis from = it.departure ? *it.departure : rq.pickup_departure.value_or(arrival);
        if (arrival - from > rq.ride_limit) continue;
        const Millis dep = std::max(arrival, stop.earliest_start) + stop.duration;
        if (found_ && dep - avail >= best_cost_) continue;
        const auto left = drive(pos, stop.node, soc);
        if (!left) continue;
        it.done = true;
        seats_ -= it.group;
        path_.push_back(std::move(stop));
        dfs(dep, Position::at_node(rq.destination), *left);
        path_.pop_back();
        seats_ += it.group;
        it.done = false;
      }
    }
    for (std::size_t f = 0; f < v_.fixed_stops.size(); ++f) {
      if (fixed_done_[f]) continue;
      const auto& stop = v_.fixed_stops[f];
      const Millis tt = oracle_.time(pos, stop.node);
      if (tt >= kInfiniteMillis) continue;
      const Millis start = std::max(time + tt, stop.earliest_start);
      const Millis dep = start + stop.duration;
      if (stop.kind == StopKind::charge && dep > stop.latest_end) continue;
      if (found_ && dep - avail >= best_cost_) continue;
      auto left = drive(pos, stop.node, soc);
      if (!left) continue;
      if (stop.kind == StopKind::charge) left = soc_after_charge(v_.snapshot, *left, stop, dep - start);
      fixed_done_[f] = 1;
      path_.push_back(stop);
      dfs(dep, Position::at_node(stop.node), *left);
      path_.pop_back();
      fixed_done_[f] = 0;
    }
  }

  const BatchVehicle& v_;
  const RequestTable& requests_;
  TravelOracle& oracle_;
  const ControlObjective& objective_;
  std::uint64_t limit_;
  std::uint64_t nodes_ = 0;
  std::vector<Item> items_;
  std::vector<char> fixed_done_;
  int seats_ = 0;
  bool energy_ = v_.snapshot.tracks_energy();
  std::size_t total_events_ = 0;
  std::vector<PlanStop> path_;
  std::vector<PlanStop> best_;
  Millis best_cost_ = 0;
  bool found_ = false;
};

bool reservation_like(const PlanRequest& r, Millis now) { return r.earliest_pickup > now; }

}  // namespace

std::optional<VehiclePlan> best_ordering(const BatchVehicle& vehicle, std::span<const RequestId> extra,
                                         const RequestTable& requests, TravelOracle& oracle,
                                         const ControlObjective& objective, std::uint64_t node_limit) {
  OrderingSearch search(vehicle, extra, requests, oracle, objective, node_limit);
  auto stops = search.run();
  if (!stops) return std::nullopt;
  VehiclePlan plan;
  plan.vehicle_id = vehicle.snapshot.id;
  plan.stops = std::move(*stops);
  evaluate(plan, vehicle.snapshot, requests, oracle);
  if (!plan.feasible)
    throw ConsistencyError(fmt::format("vehicle {}: ordering search produced an infeasible plan", plan.vehicle_id));
  return plan;
}

bool requests_compatible(const PlanRequest& a, const PlanRequest& b, int capacity, const RequestTable& requests,
                         TravelOracle& oracle, const ControlObjective& objective) {
  const Millis now = to_millis(oracle.time_point());
  if (reservation_like(a, now) || reservation_like(b, now)) return true;
  const RequestId ids[] = {a.id, b.id};
  for (const auto* first : {&a, &b}) {
    BatchVehicle virt;
    virt.snapshot.id = -1;
    virt.snapshot.capacity = capacity;
    virt.snapshot.position = Position::at_node(first->origin);
    virt.snapshot.available_time = now;
    if (best_ordering(virt, ids, requests, oracle, objective)) return true;
  }
  return false;
}

Millis unserved_weight(bool must_serve, std::size_t pool_size, const ControlObjective& objective) {
  if (!must_serve) return objective.unserved_penalty;
  return objective.unserved_penalty * static_cast<Millis>(pool_size + 1);
}

BatchResult batch_optimize(const BatchInput& input, const RequestTable& requests, TravelOracle& oracle,
                           const ControlObjective& objective, const BatchOptions& options) {
  std::vector<RequestId> pool = input.pool;
  std::sort(pool.begin(), pool.end());
  pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
  std::map<RequestId, int> pool_index;
  for (std::size_t i = 0; i < pool.size(); ++i) pool_index[pool[i]] = static_cast<int>(i);
  const std::set<RequestId> must(input.must_serve.begin(), input.must_serve.end());

  AssignmentProblem problem;
  for (auto id : pool) problem.request_weight.push_back(unserved_weight(must.count(id) > 0, pool.size(), objective));

  // Pairwise compatibility, computed lazily and shared by all vehicles.
  int max_capacity = 1;
  for (const auto& bv : input.vehicles) max_capacity = std::max(max_capacity, bv.snapshot.capacity);
  std::map<std::pair<RequestId, RequestId>, bool> rr;
  auto compatible = [&](RequestId x, RequestId y) {
    if (x > y) std::swap(x, y);
    auto it = rr.find({x, y});
    if (it != rr.end()) return it->second;
    const bool c = requests_compatible(requests.at(x), requests.at(y), max_capacity, requests, oracle, objective);
    rr.emplace(std::make_pair(x, y), c);
    return c;
  };

  std::vector<std::vector<VehiclePlan>> plans(input.vehicles.size());
  // Keeping every current plan is a valid choice whenever all of them are
  // still feasible.
  std::vector<int> keep(input.vehicles.size(), -1);
  BatchResult result;
  for (std::size_t vi = 0; vi < input.vehicles.size(); ++vi) {
    const auto& bv = input.vehicles[vi];
    auto& cands = problem.vehicle_candidates.emplace_back();
    auto& vplans = plans[vi];
    auto add_candidate = [&](VehiclePlan plan) {
      AssignmentCandidate c;
      c.cost = plan.cost;
      for (auto id : plan.pickups()) {
        auto it = pool_index.find(id);
        if (it != pool_index.end()) c.requests.push_back(it->second);
      }
      cands.push_back(std::move(c));
      vplans.push_back(std::move(plan));
    };

    VehiclePlan current = bv.current;
    current.vehicle_id = bv.snapshot.id;
    evaluate(current, bv.snapshot, requests, oracle);
    if (current.feasible) {
      keep[vi] = static_cast<int>(cands.size());
      add_candidate(current);
    }

    auto base = best_ordering(bv, {}, requests, oracle, objective, options.ordering_node_limit);
    if (!base) continue;
    add_candidate(*base);

    // Level 1: single requests that the vehicle can reach in time.
    std::vector<RequestId> singles;
    std::set<std::vector<RequestId>> feasible;
    std::vector<std::vector<RequestId>> level;
    int added = 0;
    for (auto id : pool) {
      if (added >= options.max_plans_per_vehicle) break;
      const auto& rq = requests.at(id);
      const Millis reach = oracle.time(bv.snapshot.position, rq.origin);
      if (reach >= kInfiniteMillis ||
          std::max(bv.snapshot.available_time + reach, rq.earliest_pickup) > rq.pickup_deadline)
        continue;
      const RequestId one[] = {id};
      auto plan = best_ordering(bv, one, requests, oracle, objective, options.ordering_node_limit);
      if (!plan) continue;
      singles.push_back(id);
      feasible.insert({id});
      level.push_back({id});
      add_candidate(std::move(*plan));
      ++added;
    }

    // Grow bundles; every subset of a feasible bundle has to be feasible.
    for (int size = 2; size <= options.max_bundle && added < options.max_plans_per_vehicle && !level.empty();
         ++size) {
      std::vector<std::vector<RequestId>> next;
      for (const auto& bundle : level) {
        if (added >= options.max_plans_per_vehicle) break;
        for (auto id : singles) {
          if (added >= options.max_plans_per_vehicle) break;
          if (id <= bundle.back()) continue;
          bool ok = true;
          for (auto other : bundle) {
            if (!compatible(other, id)) {
              ok = false;
              break;
            }
          }
          if (!ok) continue;
          std::vector<RequestId> grown = bundle;
          grown.push_back(id);
          for (std::size_t drop = 0; drop + 1 < grown.size() && ok; ++drop) {
            std::vector<RequestId> sub;
            for (std::size_t q = 0; q < grown.size(); ++q)
              if (q != drop) sub.push_back(grown[q]);
            ok = feasible.count(sub) > 0;
          }
          if (!ok) continue;
          auto plan = best_ordering(bv, grown, requests, oracle, objective, options.ordering_node_limit);
          if (!plan) continue;
          feasible.insert(grown);
          next.push_back(grown);
          add_candidate(std::move(*plan));
          ++added;
        }
      }
      level = std::move(next);
    }
  }

  for (const auto& c : problem.vehicle_candidates) result.candidate_plans += c.size();
  const bool keep_valid = std::none_of(keep.begin(), keep.end(), [](int c) { return c < 0; });
  const auto sol = solve_assignment(problem, options.solver_node_limit, keep_valid ? &keep : nullptr);
  result.optimal = sol.optimal;
  result.objective = sol.objective;
  std::vector<char> covered(pool.size(), 0);
  for (std::size_t vi = 0; vi < input.vehicles.size(); ++vi) {
    const int ch = sol.choice[vi];
    if (ch < 0) {
      result.plans.push_back(plans[vi].empty() ? input.vehicles[vi].current : plans[vi].front());
      continue;
    }
    for (int r : problem.vehicle_candidates[vi][static_cast<std::size_t>(ch)].requests)
      covered[static_cast<std::size_t>(r)] = 1;
    result.plans.push_back(plans[vi][static_cast<std::size_t>(ch)]);
  }
  for (std::size_t i = 0; i < pool.size(); ++i)
    if (!covered[i]) result.unassigned.push_back(pool[i]);
  return result;
}

}  // namespace fleetsim
