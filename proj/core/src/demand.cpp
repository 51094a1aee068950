#include "fleetsim/demand.h"

#include <algorithm>
#include <set>

#include <fmt/format.h>

#include "fleetsim/csv.h"

namespace fleetsim {

std::string_view to_string(RequestState s) {
  switch (s) {
    case RequestState::pending: return "pending";
    case RequestState::waiting_for_offer: return "waiting_for_offer";
    case RequestState::offer_received: return "offer_received";
    case RequestState::booked: return "booked";
    case RequestState::on_board: return "on_board";
    case RequestState::finished: return "finished";
    case RequestState::rejected_by_operator: return "rejected_by_operator";
    case RequestState::declined_by_user: return "declined_by_user";
  }
  return "?";
}

bool is_terminal(RequestState s) {
  return s == RequestState::finished || s == RequestState::rejected_by_operator || s == RequestState::declined_by_user;
}

std::string_view to_string(DecisionKind k) {
  switch (k) {
    case DecisionKind::basic: return "basic";
    case DecisionKind::time_sensitive_linear_decline: return "time_sensitive_linear_decline";
  }
  return "?";
}

DecisionKind parse_decision_kind(std::string_view name) {
  if (name == "basic" || name == "BasicRequest") return DecisionKind::basic;
  if (name == "time_sensitive_linear_decline" || name == "linear_decline" || name == "TimeSensitiveLinearDeclineRequest")
    return DecisionKind::time_sensitive_linear_decline;
  throw ValidationError(fmt::format("unknown decision model '{}'", name));
}

DecisionModel DecisionModel::linear_decline(Seconds w_full, Seconds w_zero) {
  if (!(w_full >= 0.0 && w_full < w_zero))
    throw ValidationError(fmt::format("linear decline model needs 0 <= w_full < w_zero (got {}, {})", w_full, w_zero));
  return {DecisionKind::time_sensitive_linear_decline, w_full, w_zero};
}

double DecisionModel::acceptance_probability(Seconds waiting) const {
  if (kind == DecisionKind::basic) return 1.0;
  if (waiting <= w_full) return 1.0;
  if (waiting >= w_zero) return 0.0;
  return (w_zero - waiting) / (w_zero - w_full);
}

RequestRng::RequestRng(std::uint64_t global_seed, RequestId request_id) {
  const auto id = static_cast<std::uint64_t>(request_id);
  std::seed_seq seq{static_cast<std::uint32_t>(global_seed), static_cast<std::uint32_t>(global_seed >> 32),
                    static_cast<std::uint32_t>(id), static_cast<std::uint32_t>(id >> 32), 0x5eedu};
  engine_.seed(seq);
}

double RequestRng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

void TravelerRequest::transition(RequestState next) {
  using S = RequestState;
  bool ok = false;
  switch (state) {
    case S::pending: ok = next == S::waiting_for_offer; break;
    case S::waiting_for_offer: ok = next == S::offer_received || next == S::rejected_by_operator; break;
    case S::offer_received: ok = next == S::booked || next == S::declined_by_user; break;
    case S::booked: ok = next == S::on_board || (next == S::finished && truncated); break;
    case S::on_board: ok = next == S::finished; break;
    default: ok = false;
  }
  if (!ok)
    throw ConsistencyError(fmt::format("request {}: illegal transition {} -> {}", id, to_string(state), to_string(next)));
  state = next;
}

Decision choose_offer(const TravelerRequest& request, std::span<const Offer> offers, std::uint64_t global_seed) {
  const Offer* best = nullptr;
  for (const auto& o : offers) {
    if (!o.valid) continue;
    if (!best || o.expected_waiting_time < best->expected_waiting_time ||
        (o.expected_waiting_time == best->expected_waiting_time && o.operator_id < best->operator_id))
      best = &o;
  }
  if (!best) return {};
  const double p = request.behavior.acceptance_probability(best->expected_waiting_time);
  if (request.behavior.kind == DecisionKind::basic) return {true, best->operator_id};
  RequestRng rng(global_seed, request.id);
  if (rng.uniform() < p) return {true, best->operator_id};
  return {false, best->operator_id};
}

Demand::Demand(std::vector<TravelerRequest> requests) : requests_(std::move(requests)) {
  std::stable_sort(requests_.begin(), requests_.end(), [](const auto& a, const auto& b) {
    if (a.request_time != b.request_time) return a.request_time < b.request_time;
    return a.id < b.id;
  });
  for (std::size_t i = 0; i < requests_.size(); ++i) {
    auto [it, inserted] = index_.emplace(requests_[i].id, i);
    if (!inserted) throw ValidationError(fmt::format("duplicate request_id {}", requests_[i].id));
  }
}

TravelerRequest& Demand::get(RequestId id) {
  auto it = index_.find(id);
  if (it == index_.end()) throw LookupError(fmt::format("unknown request {}", id));
  return requests_[it->second];
}

const TravelerRequest& Demand::get(RequestId id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw LookupError(fmt::format("unknown request {}", id));
  return requests_[it->second];
}

std::vector<RequestId> Demand::reveal(Seconds t_prev, Seconds t_now) {
  std::vector<RequestId> out;
  while (cursor_ < requests_.size() && requests_[cursor_].request_time <= t_prev) ++cursor_;
  while (cursor_ < requests_.size() && requests_[cursor_].request_time <= t_now) {
    auto& r = requests_[cursor_++];
    r.transition(RequestState::waiting_for_offer);
    out.push_back(r.id);
  }
  return out;
}

void Demand::finalize(Seconds) {
  for (auto& r : requests_) {
    switch (r.state) {
      case RequestState::waiting_for_offer:
        r.transition(RequestState::rejected_by_operator);
        break;
      case RequestState::offer_received:
        r.transition(RequestState::declined_by_user);
        break;
      case RequestState::booked:
      case RequestState::on_board:
        r.truncated = true;
        r.transition(RequestState::finished);
        break;
      default:
        break;
    }
  }
}

std::vector<TravelerRequest> load_demand(const std::filesystem::path& file, const Network& network,
                                         const DecisionModel& default_behavior) {
  auto table = csv::Table::read(file);
  std::vector<TravelerRequest> out;
  out.reserve(table.rows());
  std::set<RequestId> ids;
  for (std::size_t r = 0; r < table.rows(); ++r) {
    TravelerRequest rq;
    rq.id = table.get_int(r, "request_id");
    rq.request_time = table.get_double(r, "rq_time");
    rq.origin = static_cast<NodeId>(table.get_int(r, "start"));
    rq.destination = static_cast<NodeId>(table.get_int(r, "end"));
    rq.group_size = static_cast<int>(table.get_int_or(r, "group_size", 1));
    const auto where = fmt::format("{} line {}", file.string(), table.line_of(r));
    if (!ids.insert(rq.id).second) throw ValidationError(fmt::format("{}: duplicate request_id {}", where, rq.id));
    if (!network.has_node(rq.origin) || !network.has_node(rq.destination))
      throw ValidationError(fmt::format("{}: request {} references a node outside the network", where, rq.id));
    if (rq.origin == rq.destination)
      throw ValidationError(fmt::format("{}: request {} has identical origin and destination", where, rq.id));
    if (rq.group_size < 1) throw ValidationError(fmt::format("{}: group_size must be >= 1", where));
    if (auto ep = table.get(r, "earliest_pickup"); ep && !ep->empty()) {
      rq.earliest_pickup = csv::parse_double(*ep, "earliest_pickup");
    }
    rq.behavior = default_behavior;
    if (auto model = table.get(r, "decision_model")) {
      const auto kind = parse_decision_kind(*model);
      if (kind == DecisionKind::basic) {
        rq.behavior = DecisionModel::basic();
      } else {
        rq.behavior = DecisionModel::linear_decline(table.get_double_or(r, "w_full", default_behavior.w_full),
                                                    table.get_double_or(r, "w_zero", default_behavior.w_zero));
      }
    }
    out.push_back(rq);
  }
  return out;
}

UserRecord record_user_outcome(const TravelerRequest& r) {
  UserRecord u;
  u.request_id = r.id;
  u.request_time = r.request_time;
  u.origin = r.origin;
  u.destination = r.destination;
  u.group_size = r.group_size;
  u.earliest_pickup = r.earliest_pickup;
  u.decision_model = std::string(to_string(r.behavior.kind));
  u.state = std::string(to_string(r.state));
  u.truncated = r.truncated;
  if (r.offer) {
    u.offer_operator = r.offer->operator_id;
    u.offered_waiting_time = r.offer->expected_waiting_time;
    u.offered_travel_time = r.offer->expected_travel_time;
    u.offered_fare = r.offer->fare;
  }
  if (r.state == RequestState::finished) {
    u.operator_id = r.serving_operator;
    u.vehicle_id = r.vehicle;
    u.pickup_time = r.pickup_time;
    u.pickup_node = r.pickup_node;
    u.dropoff_time = r.dropoff_time;
    u.dropoff_node = r.dropoff_node;
  }
  u.direct_travel_time = r.direct_travel_time;
  u.direct_distance = r.direct_distance;
  return u;
}

}  // namespace fleetsim
