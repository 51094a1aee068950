#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fleetsim/network.h"
#include "fleetsim/types.h"

namespace fleetsim {

enum class RequestState {
  pending,
  waiting_for_offer,
  offer_received,
  booked,
  on_board,
  finished,
  rejected_by_operator,
  declined_by_user,
};

std::string_view to_string(RequestState s);
bool is_terminal(RequestState s);

enum class DecisionKind { basic, time_sensitive_linear_decline };

std::string_view to_string(DecisionKind k);
DecisionKind parse_decision_kind(std::string_view name);

/// Offer decision behaviour of a traveler.
///
/// The linear-decline model accepts an offered waiting time w with
/// probability 1 up to w_full, falling linearly to 0 at w_zero.
struct DecisionModel {
  DecisionKind kind = DecisionKind::basic;
  Seconds w_full = 0.0;
  Seconds w_zero = 0.0;

  static DecisionModel basic() { return {}; }
  static DecisionModel linear_decline(Seconds w_full, Seconds w_zero);

  double acceptance_probability(Seconds waiting) const;
};

struct Offer {
  OperatorId operator_id = 0;
  Seconds expected_waiting_time = 0.0;
  Seconds expected_travel_time = 0.0;
  double fare = 0.0;
  bool valid = false;

  static Offer rejection(OperatorId op) { return Offer{op, 0.0, 0.0, 0.0, false}; }
};

struct Decision {
  bool accepted = false;
  OperatorId operator_id = -1;
};

/// Deterministic per-request random substream: seeded from
/// (global seed, request id), so draws do not depend on processing order.
class RequestRng {
 public:
  RequestRng(std::uint64_t global_seed, RequestId request_id);
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();

 private:
  std::mt19937_64 engine_;
};

struct TravelerRequest {
  RequestId id = 0;
  Seconds request_time = 0.0;
  NodeId origin = kNoNode;
  NodeId destination = kNoNode;
  int group_size = 1;
  /// Pre-booked pickup time; absent for on-demand trips.
  std::optional<Seconds> earliest_pickup;
  DecisionModel behavior;
  RequestState state = RequestState::pending;

  // Outcome bookkeeping filled while the simulation runs.
  std::optional<Offer> offer;  // the chosen offer, or the best one that was declined
  std::optional<OperatorId> serving_operator;
  std::optional<VehicleId> vehicle;
  std::optional<Seconds> pickup_time;
  std::optional<Seconds> dropoff_time;
  std::optional<NodeId> pickup_node;
  std::optional<NodeId> dropoff_node;
  Seconds direct_travel_time = 0.0;
  double direct_distance = 0.0;
  bool truncated = false;

  /// Applies a lifecycle transition; throws ConsistencyError on an illegal one.
  void transition(RequestState next);
};

/// Picks an operator among offers. Basic: the valid offer with the lowest
/// waiting time (then operator id). Linear decline: that offer is accepted
/// with acceptance_probability(waiting) using the request's substream.
Decision choose_offer(const TravelerRequest& request, std::span<const Offer> offers, std::uint64_t global_seed);

/// Travelers sorted by (request_time, request_id) and revealed over time.
class Demand {
 public:
  Demand() = default;
  explicit Demand(std::vector<TravelerRequest> requests);

  std::size_t size() const { return requests_.size(); }
  const std::vector<TravelerRequest>& requests() const { return requests_; }
  TravelerRequest& get(RequestId id);
  const TravelerRequest& get(RequestId id) const;

  /// Requests with t_prev < request_time <= t_now, moved to waiting_for_offer.
  std::vector<RequestId> reveal(Seconds t_prev, Seconds t_now);

  /// Finalises every non-terminal traveler at the simulation end.
  void finalize(Seconds end_time);

 private:
  std::vector<TravelerRequest> requests_;
  std::map<RequestId, std::size_t> index_;
  std::size_t cursor_ = 0;
};

/// Reads `request_id,rq_time,start,end[,group_size][,decision_model][,w_full][,w_zero][,earliest_pickup]`.
/// `default_behavior` applies to rows without a decision_model column value.
std::vector<TravelerRequest> load_demand(const std::filesystem::path& file, const Network& network,
                                         const DecisionModel& default_behavior = DecisionModel::basic());

struct UserRecord {
  RequestId request_id = 0;
  Seconds request_time = 0.0;
  NodeId origin = kNoNode;
  NodeId destination = kNoNode;
  int group_size = 1;
  std::optional<Seconds> earliest_pickup;
  std::string decision_model;
  std::string state;
  bool truncated = false;
  std::optional<OperatorId> offer_operator;
  std::optional<Seconds> offered_waiting_time;
  std::optional<Seconds> offered_travel_time;
  std::optional<double> offered_fare;
  std::optional<OperatorId> operator_id;
  std::optional<VehicleId> vehicle_id;
  std::optional<Seconds> pickup_time;
  std::optional<NodeId> pickup_node;
  std::optional<Seconds> dropoff_time;
  std::optional<NodeId> dropoff_node;
  Seconds direct_travel_time = 0.0;
  double direct_distance = 0.0;
};

UserRecord record_user_outcome(const TravelerRequest& request);

}  // namespace fleetsim
