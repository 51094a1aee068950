#include <gtest/gtest.h>

#include "fleetsim/demand.h"
#include "test_support.h"

using namespace fleetsim;
using fleetsim::testing::line_network;
using fleetsim::testing::TempDir;
using fleetsim::testing::write_file;

namespace {

TravelerRequest request(RequestId id, Seconds t, DecisionModel m = DecisionModel::basic()) {
  TravelerRequest r;
  r.id = id;
  r.request_time = t;
  r.origin = 0;
  r.destination = 1;
  r.behavior = m;
  return r;
}

Offer offer(OperatorId op, Seconds wait) {
  Offer o;
  o.operator_id = op;
  o.expected_waiting_time = wait;
  o.valid = true;
  return o;
}

}  // namespace

TEST(LoadDemand, EmptyFileGivesEmptyStream) {
  TempDir dir;
  write_file(dir / "d.csv", "request_id,rq_time,start,end\n");
  EXPECT_TRUE(load_demand(dir / "d.csv", line_network(3)).empty());
}

TEST(LoadDemand, RevealsInTimeOrder) {
  TempDir dir;
  write_file(dir / "d.csv", "request_id,rq_time,start,end\n1,100,0,2\n2,50,2,0\n");
  Demand d(load_demand(dir / "d.csv", line_network(3)));
  auto ids = d.reveal(0.0, 1000.0);
  EXPECT_EQ(ids, (std::vector<RequestId>{2, 1}));
}

TEST(LoadDemand, RejectsSameOriginAndDestination) {
  TempDir dir;
  write_file(dir / "d.csv", "request_id,rq_time,start,end\n1,100,1,1\n");
  EXPECT_THROW(load_demand(dir / "d.csv", line_network(3)), ValidationError);
}

TEST(LoadDemand, RejectsUnknownNode) {
  TempDir dir;
  write_file(dir / "d.csv", "request_id,rq_time,start,end\n1,100,0,7\n");
  EXPECT_THROW(load_demand(dir / "d.csv", line_network(3)), Error);
}

TEST(LoadDemand, ReadsOptionalColumns) {
  TempDir dir;
  write_file(dir / "d.csv",
             "request_id,rq_time,start,end,group_size,decision_model,w_full,w_zero,earliest_pickup\n"
             "1,100,0,2,2,time_sensitive_linear_decline,240,360,900\n"
             "2,110,2,0,,,,,\n");
  auto rs = load_demand(dir / "d.csv", line_network(3));
  ASSERT_EQ(rs.size(), 2u);
  EXPECT_EQ(rs[0].group_size, 2);
  EXPECT_EQ(rs[0].behavior.kind, DecisionKind::time_sensitive_linear_decline);
  EXPECT_DOUBLE_EQ(rs[0].behavior.w_zero, 360.0);
  ASSERT_TRUE(rs[0].earliest_pickup.has_value());
  EXPECT_DOUBLE_EQ(*rs[0].earliest_pickup, 900.0);
  EXPECT_EQ(rs[1].group_size, 1);
  EXPECT_EQ(rs[1].behavior.kind, DecisionKind::basic);
  EXPECT_FALSE(rs[1].earliest_pickup.has_value());
}

TEST(Reveal, HalfOpenWindow) {
  Demand d({request(1, 60.0), request(2, 120.0), request(3, 120.0)});
  EXPECT_TRUE(d.reveal(0.0, 59.0).empty());
  EXPECT_EQ(d.reveal(59.0, 60.0), (std::vector<RequestId>{1}));
  EXPECT_EQ(d.reveal(60.0, 120.0), (std::vector<RequestId>{2, 3}));
  EXPECT_EQ(d.get(2).state, RequestState::waiting_for_offer);
}

TEST(Reveal, DuplicateIdsAreRejected) { EXPECT_THROW(Demand({request(1, 0.0), request(1, 5.0)}), ValidationError); }

TEST(ChooseOffer, BasicAcceptsTheShortestWait) {
  auto r = request(1, 0.0);
  std::vector<Offer> offers{offer(1, 200.0), offer(0, 100.0)};
  auto d = choose_offer(r, offers, 7);
  EXPECT_TRUE(d.accepted);
  EXPECT_EQ(d.operator_id, 0);
  Offer invalid;
  EXPECT_FALSE(choose_offer(r, std::vector<Offer>{invalid}, 7).accepted);
}

TEST(ChooseOffer, LinearDeclineProbability) {
  auto m = DecisionModel::linear_decline(240.0, 360.0);
  EXPECT_DOUBLE_EQ(m.acceptance_probability(300.0), 0.5);
  EXPECT_DOUBLE_EQ(m.acceptance_probability(240.0), 1.0);
  EXPECT_DOUBLE_EQ(m.acceptance_probability(100.0), 1.0);
  EXPECT_DOUBLE_EQ(m.acceptance_probability(360.0), 0.0);
  for (RequestId id = 0; id < 200; ++id) {
    EXPECT_FALSE(choose_offer(request(id, 0.0, m), std::vector<Offer>{offer(0, 360.0)}, 3).accepted);
    EXPECT_TRUE(choose_offer(request(id, 0.0, m), std::vector<Offer>{offer(0, 240.0)}, 3).accepted);
  }
}

TEST(ChooseOffer, DrawsAreSeededPerRequest) {
  auto m = DecisionModel::linear_decline(240.0, 360.0);
  std::vector<Offer> o{offer(0, 300.0)};
  int accepted = 0;
  for (RequestId id = 0; id < 2000; ++id) {
    const bool a = choose_offer(request(id, 0.0, m), o, 11).accepted;
    EXPECT_EQ(a, choose_offer(request(id, 0.0, m), o, 11).accepted);
    accepted += a;
  }
  // Binomial(2000, 0.5): 5 standard deviations is about 112.
  EXPECT_NEAR(accepted, 1000, 112);
  RequestRng a(1, 2), b(1, 2), c(2, 1);
  EXPECT_EQ(a.uniform(), b.uniform());
  EXPECT_NE(RequestRng(1, 2).uniform(), c.uniform());
}

TEST(Transitions, IllegalMovesThrow) {
  auto r = request(1, 0.0);
  EXPECT_THROW(r.transition(RequestState::booked), ConsistencyError);
  r.transition(RequestState::waiting_for_offer);
  r.transition(RequestState::rejected_by_operator);
  EXPECT_TRUE(is_terminal(r.state));
  EXPECT_THROW(r.transition(RequestState::booked), ConsistencyError);
}

TEST(Finalize, MapsOpenStatesToTerminalOnes) {
  Demand d({request(1, 0.0), request(2, 0.0), request(3, 0.0), request(4, 5000.0)});
  d.reveal(-1.0, 0.0);
  d.get(2).transition(RequestState::offer_received);
  d.get(3).transition(RequestState::offer_received);
  d.get(3).transition(RequestState::booked);
  d.finalize(100.0);
  EXPECT_EQ(d.get(1).state, RequestState::rejected_by_operator);
  EXPECT_EQ(d.get(2).state, RequestState::declined_by_user);
  EXPECT_EQ(d.get(3).state, RequestState::finished);
  EXPECT_TRUE(d.get(3).truncated);
  EXPECT_EQ(d.get(4).state, RequestState::pending);
}

TEST(UserRecord, RejectedHasEmptyServiceColumns) {
  auto r = request(1, 10.0);
  r.transition(RequestState::waiting_for_offer);
  r.transition(RequestState::rejected_by_operator);
  auto rec = record_user_outcome(r);
  EXPECT_EQ(rec.state, "rejected_by_operator");
  EXPECT_FALSE(rec.pickup_time.has_value());
  EXPECT_FALSE(rec.offer_operator.has_value());
  EXPECT_FALSE(rec.vehicle_id.has_value());
}

TEST(UserRecord, DeclinedKeepsTheOffer) {
  auto r = request(1, 10.0);
  r.transition(RequestState::waiting_for_offer);
  r.transition(RequestState::offer_received);
  r.offer = offer(0, 120.0);
  r.transition(RequestState::declined_by_user);
  auto rec = record_user_outcome(r);
  ASSERT_TRUE(rec.offered_waiting_time.has_value());
  EXPECT_DOUBLE_EQ(*rec.offered_waiting_time, 120.0);
  EXPECT_FALSE(rec.pickup_time.has_value());
}

TEST(UserRecord, ServedHasCausalTimes) {
  auto r = request(1, 10.0);
  r.transition(RequestState::waiting_for_offer);
  r.transition(RequestState::offer_received);
  r.offer = offer(0, 50.0);
  r.transition(RequestState::booked);
  r.serving_operator = 0;
  r.vehicle = 3;
  r.transition(RequestState::on_board);
  r.pickup_time = 60.0;
  r.transition(RequestState::finished);
  r.dropoff_time = 200.0;
  auto rec = record_user_outcome(r);
  EXPECT_EQ(rec.state, "finished");
  EXPECT_GE(*rec.pickup_time, rec.request_time);
  EXPECT_EQ(rec.vehicle_id, 3);
}
