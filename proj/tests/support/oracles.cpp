#include <algorithm>
#include <functional>
#include <map>
#include <random>

#include "test_support.h"

namespace fleetsim::testing {

TimeMatrix all_pairs_times(const Network& net, Seconds t) {
  TimeMatrix out;
  for (std::size_t s = 0; s < net.node_count(); ++s) {
    auto row = bellman_ford(net, static_cast<NodeId>(s), t);
    auto& times = out.emplace_back();
    for (const auto& c : row) times.push_back(c.time);
  }
  return out;
}

namespace {

// With `complete` false the travelers still on board at the end are fine,
// which makes the check usable on prefixes.
std::optional<Millis> sequence_cost(const TimeMatrix& tt, const OracleVehicle& v, const std::vector<Event>& events,
                                    const RequestTable& requests, Millis boarding, bool complete) {
  std::map<RequestId, Millis> aboard;  // request -> departure of its pickup
  int seats = 0;
  for (auto id : v.on_board) {
    const auto& rq = requests.at(id);
    aboard[id] = *rq.pickup_departure;
    seats += rq.group_size;
  }
  if (seats > v.capacity) return std::nullopt;
  std::map<RequestId, bool> picked;
  NodeId at = v.node;
  Millis clock = v.available;
  for (const auto& [id, pickup] : events) {
    const auto& rq = requests.at(id);
    const NodeId to = pickup ? rq.origin : rq.destination;
    const Millis travel = tt[static_cast<std::size_t>(at)][static_cast<std::size_t>(to)];
    if (travel >= kInfiniteMillis) return std::nullopt;
    const Millis arrival = clock + travel;
    if (pickup) {
      if (picked[id] || aboard.count(id)) return std::nullopt;
      const Millis start = std::max(arrival, rq.earliest_pickup);
      if (start > rq.pickup_deadline) return std::nullopt;
      picked[id] = true;
      clock = start + boarding;
      aboard[id] = clock;
      seats += rq.group_size;
      if (seats > v.capacity) return std::nullopt;
    } else {
      auto it = aboard.find(id);
      if (it == aboard.end()) return std::nullopt;
      if (arrival - it->second > rq.ride_limit) return std::nullopt;
      aboard.erase(it);
      seats -= rq.group_size;
      clock = arrival + boarding;
    }
    at = to;
  }
  if (complete && !aboard.empty()) return std::nullopt;
  return clock - v.available;
}

}  // namespace

std::optional<Millis> oracle_sequence_cost(const TimeMatrix& tt, const OracleVehicle& v, const std::vector<Event>& events,
                                           const RequestTable& requests, Millis boarding) {
  return sequence_cost(tt, v, events, requests, boarding, true);
}

std::optional<Millis> oracle_best_insertion(const TimeMatrix& tt, const OracleVehicle& v,
                                            const std::vector<Event>& plan, RequestId id,
                                            const RequestTable& requests, Millis boarding) {
  const auto base = oracle_sequence_cost(tt, v, plan, requests, boarding);
  if (!base) return std::nullopt;
  std::optional<Millis> best;
  for (std::size_t i = 0; i <= plan.size(); ++i) {
    for (std::size_t j = i; j <= plan.size(); ++j) {
      std::vector<Event> seq(plan.begin(), plan.end());
      seq.insert(seq.begin() + static_cast<std::ptrdiff_t>(j), Event{id, false});
      seq.insert(seq.begin() + static_cast<std::ptrdiff_t>(i), Event{id, true});
      const auto c = oracle_sequence_cost(tt, v, seq, requests, boarding);
      if (c && (!best || *c - *base < *best)) best = *c - *base;
    }
  }
  return best;
}

namespace {

// Minimum cost over every valid event order serving the on-board travelers
// and the pickups in `extra`.
std::optional<Millis> oracle_best_order(const TimeMatrix& tt, const OracleVehicle& v, const std::vector<RequestId>& extra,
                                        const RequestTable& requests, Millis boarding) {
  std::vector<Event> remaining;
  for (auto id : v.on_board) remaining.push_back({id, false});
  for (auto id : extra) remaining.push_back({id, true});
  std::vector<Event> seq;
  std::optional<Millis> best;
  std::function<void()> rec = [&] {
    if (remaining.empty()) {
      const auto c = oracle_sequence_cost(tt, v, seq, requests, boarding);
      if (c && (!best || *c < *best)) best = c;
      return;
    }
    for (std::size_t k = 0; k < remaining.size(); ++k) {
      const Event e = remaining[k];
      remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(k));
      seq.push_back(e);
      if (e.second) remaining.push_back({e.first, false});
      // A violated prefix stays violated.
      if (sequence_cost(tt, v, seq, requests, boarding, false)) rec();
      if (e.second) remaining.pop_back();
      seq.pop_back();
      remaining.insert(remaining.begin() + static_cast<std::ptrdiff_t>(k), e);
    }
  };
  rec();
  return best;
}

}  // namespace

Millis oracle_batch_objective(const TimeMatrix& tt, const std::vector<OracleVehicle>& vehicles,
                              const std::vector<RequestId>& pool, const std::vector<RequestId>& must_serve,
                              const RequestTable& requests, Millis boarding, Millis penalty) {
  const std::size_t n = pool.size();
  const std::size_t masks = std::size_t{1} << n;
  // best[m]: cheapest cost of the vehicles so far covering exactly m.
  std::vector<std::optional<Millis>> best(masks);
  best[0] = 0;
  for (const auto& v : vehicles) {
    std::vector<std::optional<Millis>> own(masks);
    for (std::size_t m = 0; m < masks; ++m) {
      std::vector<RequestId> extra;
      for (std::size_t i = 0; i < n; ++i)
        if (m & (std::size_t{1} << i)) extra.push_back(pool[i]);
      own[m] = oracle_best_order(tt, v, extra, requests, boarding);
    }
    std::vector<std::optional<Millis>> next(masks);
    for (std::size_t a = 0; a < masks; ++a) {
      if (!best[a]) continue;
      for (std::size_t b = 0; b < masks; ++b) {
        if ((a & b) || !own[b]) continue;
        const Millis c = *best[a] + *own[b];
        if (!next[a | b] || c < *next[a | b]) next[a | b] = c;
      }
    }
    best = std::move(next);
  }
  std::optional<Millis> result;
  for (std::size_t m = 0; m < masks; ++m) {
    if (!best[m]) continue;
    Millis c = *best[m];
    for (std::size_t i = 0; i < n; ++i) {
      if (m & (std::size_t{1} << i)) continue;
      const bool must = std::find(must_serve.begin(), must_serve.end(), pool[i]) != must_serve.end();
      c += must ? penalty * static_cast<Millis>(n + 1) : penalty;
    }
    if (!result || c < *result) result = c;
  }
  return result.value_or(kInfiniteMillis);
}

std::vector<Event> plan_events(std::span<const PlanStop> stops) {
  std::vector<Event> out;
  for (const auto& s : stops) {
    for (auto id : s.alighting) out.push_back({id, false});
    for (auto id : s.boarding) out.push_back({id, true});
  }
  return out;
}

std::vector<PlanStop> event_stops(const std::vector<Event>& events, const RequestTable& requests, Millis boarding) {
  std::vector<PlanStop> out;
  for (const auto& [id, pickup] : events) {
    const auto& rq = requests.at(id);
    out.push_back(pickup ? PlanStop::pickup(rq, boarding) : PlanStop::dropoff(rq, boarding));
  }
  return out;
}

VehicleSnapshot snapshot_of(const OracleVehicle& v, const RequestTable& requests) {
  VehicleSnapshot s;
  s.id = v.id;
  s.capacity = v.capacity;
  s.position = Position::at_node(v.node);
  s.available_time = v.available;
  for (auto id : v.on_board) s.on_board.push_back({id, requests.at(id).group_size});
  return s;
}

namespace {

struct CaseRng {
  std::mt19937_64 gen;
  explicit CaseRng(std::uint64_t seed) : gen(seed) {}
  std::int64_t range(std::int64_t lo, std::int64_t hi) {
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(gen);
  }
};

PlanRequest make_request(RequestId id, const TimeMatrix& tt, std::size_t nodes, Millis now, CaseRng& rng) {
  PlanRequest r;
  r.id = id;
  r.origin = static_cast<NodeId>(rng.range(0, static_cast<std::int64_t>(nodes) - 1));
  do {
    r.destination = static_cast<NodeId>(rng.range(0, static_cast<std::int64_t>(nodes) - 1));
  } while (r.destination == r.origin);
  r.group_size = rng.range(0, 3) == 0 ? 2 : 1;
  r.request_time = now;
  r.earliest_pickup = rng.range(0, 3) == 0 ? now + rng.range(0, 30) * 1000 : now;
  r.latest_pickup = r.earliest_pickup + rng.range(8, 60) * 1000;
  r.direct_time = tt[static_cast<std::size_t>(r.origin)][static_cast<std::size_t>(r.destination)];
  r.max_ride = r.direct_time + r.direct_time * rng.range(2, 10) / 10;
  r.state = PlanRequestState::offered;
  r.reset_limits();
  return r;
}

void make_on_board(PlanRequest& r, const OracleVehicle& v, const TimeMatrix& tt, CaseRng& rng) {
  r.state = PlanRequestState::picked_up;
  r.pickup_departure = v.available - rng.range(0, 10) * 1000;
  const Millis direct = tt[static_cast<std::size_t>(v.node)][static_cast<std::size_t>(r.destination)];
  r.ride_limit = (v.available - *r.pickup_departure) + direct + rng.range(0, 40) * 1000;
  r.max_ride = r.ride_limit;
}

}  // namespace

InsertionCase random_insertion_case(std::uint64_t seed) {
  CaseRng rng(seed);
  InsertionCase c;
  const auto nodes = static_cast<std::size_t>(rng.range(6, 16));
  c.net = random_network(nodes, nodes + static_cast<std::size_t>(rng.range(0, 20)), seed * 7919 + 1);
  const auto tt = all_pairs_times(c.net, 0.0);
  c.vehicle.id = 1;
  c.vehicle.node = static_cast<NodeId>(rng.range(0, static_cast<std::int64_t>(nodes) - 1));
  c.vehicle.available = 100'000 + rng.range(0, 5000);
  c.vehicle.capacity = static_cast<int>(rng.range(2, 4));
  for (int attempt = 0;; ++attempt) {
    c.requests.clear();
    c.vehicle.on_board.clear();
    c.plan.clear();
    RequestId next = 1;
    if (rng.range(0, 2) == 0) {
      auto r = make_request(next++, tt, nodes, c.vehicle.available - 30'000, rng);
      r.group_size = 1;
      make_on_board(r, c.vehicle, tt, rng);
      c.vehicle.on_board.push_back(r.id);
      c.plan.push_back({r.id, false});
      c.requests[r.id] = r;
    }
    const auto existing = rng.range(0, 3);
    for (std::int64_t k = 0; k < existing; ++k) {
      auto r = make_request(next++, tt, nodes, c.vehicle.available - rng.range(0, 20'000), rng);
      // Relax the limits of planned travelers on later attempts.
      if (attempt > 20) {
        r.latest_pickup += 600'000;
        r.max_ride += 600'000;
        r.reset_limits();
      }
      const auto p = static_cast<std::size_t>(rng.range(0, static_cast<std::int64_t>(c.plan.size())));
      c.plan.insert(c.plan.begin() + static_cast<std::ptrdiff_t>(p), Event{r.id, true});
      const auto d = static_cast<std::size_t>(rng.range(static_cast<std::int64_t>(p) + 1,
                                                        static_cast<std::int64_t>(c.plan.size())));
      c.plan.insert(c.plan.begin() + static_cast<std::ptrdiff_t>(d), Event{r.id, false});
      r.state = PlanRequestState::booked;
      c.requests[r.id] = r;
    }
    if (!oracle_sequence_cost(tt, c.vehicle, c.plan, c.requests, c.boarding)) continue;
    auto r = make_request(next, tt, nodes, c.vehicle.available, rng);
    c.new_request = r.id;
    c.requests[r.id] = r;
    return c;
  }
}

BatchCase random_batch_case(std::uint64_t seed, int max_pool) {
  CaseRng rng(seed);
  BatchCase c;
  const auto nodes = static_cast<std::size_t>(rng.range(6, 14));
  c.net = random_network(nodes, nodes + static_cast<std::size_t>(rng.range(0, 15)), seed * 104729 + 3);
  const auto tt = all_pairs_times(c.net, 0.0);
  const Millis now = 200'000;
  RequestId next = 1;
  const auto vehicles = rng.range(1, 3);
  for (std::int64_t k = 0; k < vehicles; ++k) {
    OracleVehicle v;
    v.id = static_cast<VehicleId>(k);
    v.node = static_cast<NodeId>(rng.range(0, static_cast<std::int64_t>(nodes) - 1));
    v.available = now + rng.range(0, 8) * 1000;
    v.capacity = static_cast<int>(rng.range(1, 4));
    if (rng.range(0, 2) == 0) {
      auto r = make_request(next++, tt, nodes, now - 40'000, rng);
      r.group_size = 1;
      make_on_board(r, v, tt, rng);
      v.on_board.push_back(r.id);
      c.requests[r.id] = r;
    }
    c.vehicles.push_back(v);
  }
  const auto pool = rng.range(1, max_pool);
  for (std::int64_t k = 0; k < pool; ++k) {
    auto r = make_request(next++, tt, nodes, now - rng.range(0, 10) * 1000, rng);
    if (rng.range(0, 2) == 0) {
      r.state = PlanRequestState::booked;
      c.must_serve.push_back(r.id);
    }
    c.pool.push_back(r.id);
    c.requests[r.id] = r;
  }
  return c;
}

}  // namespace fleetsim::testing
