#include <gtest/gtest.h>

#include "fleetsim/fleet_control.h"
#include "test_support.h"

using namespace fleetsim;
using namespace fleetsim::testing;

namespace {

VehicleType ev(double range_m = 100000.0) {
  VehicleType t;
  t.type_id = "ev";
  t.capacity = 4;
  t.battery_kwh = 50.0;
  t.range_m = range_m;
  return t;
}

TravelerRequest traveler(RequestId id, NodeId o, NodeId d, Seconds t = 0.0) {
  TravelerRequest r;
  r.id = id;
  r.request_time = t;
  r.origin = o;
  r.destination = d;
  return r;
}

ChargingStation station(StationId id, NodeId node) {
  ChargingStation s;
  s.station_id = id;
  s.node = node;
  s.sockets.push_back({0, 50.0});
  return s;
}

}  // namespace

TEST(Pricing, Formulas) {
  EXPECT_DOUBLE_EQ(utilization_fare_factor(0.0, 0.95, 0.7), 1.0);
  EXPECT_DOUBLE_EQ(utilization_fare_factor(2.0, 0.9, 0.7), 1.4);
  EXPECT_DOUBLE_EQ(utilization_fare_factor(2.0, 0.5, 0.7), 1.0);
  EXPECT_DOUBLE_EQ(time_fare_factor({}, 5000.0), 1.0);
  const std::vector<std::pair<Seconds, double>> table{{3600.0, 1.2}, {7200.0, 0.9}};
  EXPECT_DOUBLE_EQ(time_fare_factor(table, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(time_fare_factor(table, 3600.0), 1.2);
  EXPECT_DOUBLE_EQ(time_fare_factor(table, 9000.0), 0.9);
}

class RepositionFixture : public ::testing::Test {
 protected:
  // Zones: 0 = {0,1} (centroid 0), 1 = {2} (centroid 2), 2 = {3,4} (centroid 4).
  Network net = line_network(5, 500.0, 50.0);
  Router router{net};
  TravelOracle oracle{router, 0.0};
  ZoneSystem zones{{{0, 0}, {1, 0}, {2, 1}, {3, 2}, {4, 2}}, {{0, 0}, {1, 2}, {2, 4}}};
  DemandForecast forecast{900.0};
};

TEST_F(RepositionFixture, BalancedZonesStay) {
  forecast.add(1, 0.0, 1.0);
  const std::vector<IdleVehicle> idle{{7, 2}};
  EXPECT_TRUE(reposition(zones, forecast, idle, 0.0, 900.0, oracle).empty());
  EXPECT_TRUE(reposition(zones, DemandForecast{}, {}, 0.0, 900.0, oracle).empty());
}

TEST_F(RepositionFixture, SurplusMovesToDeficit) {
  forecast.add(1, 0.0, 1.0);
  const std::vector<IdleVehicle> idle{{7, 0}};
  auto moves = reposition(zones, forecast, idle, 0.0, 900.0, oracle);
  ASSERT_EQ(moves.size(), 1u);
  EXPECT_EQ(moves[0].vehicle_id, 7);
  EXPECT_EQ(moves[0].from_zone, 0);
  EXPECT_EQ(moves[0].to_zone, 1);
  EXPECT_EQ(moves[0].target, 2);
}

TEST_F(RepositionFixture, NearerDeficitFirst) {
  forecast.add(1, 0.0, 1.0);
  forecast.add(2, 0.0, 1.0);
  const std::vector<IdleVehicle> idle{{3, 1}};
  auto moves = reposition(zones, forecast, idle, 0.0, 900.0, oracle);
  ASSERT_EQ(moves.size(), 1u);
  EXPECT_EQ(moves[0].to_zone, 1);
}

TEST_F(RepositionFixture, ForecastOutsideHorizonIsIgnored) {
  forecast.add(1, 900.0, 5.0);
  const std::vector<IdleVehicle> idle{{7, 0}};
  EXPECT_TRUE(reposition(zones, forecast, idle, 0.0, 900.0, oracle).empty());
  EXPECT_DOUBLE_EQ(forecast.expected(1, 0.0, 901.0), 5.0);
}

class OperatorFixture : public ::testing::Test {
 protected:
  void make(int vehicles, std::vector<NodeId> starts = {}) {
    for (int i = 0; i < vehicles; ++i) {
      const NodeId n = starts.empty() ? static_cast<NodeId>(i) : starts[static_cast<std::size_t>(i)];
      fleet.emplace_back(i, 0, ev(), Position::at_node(n));
    }
    op = std::make_unique<FleetOperator>(cfg, fleet, router, &infra, nullptr, nullptr);
  }

  Network net = line_network(100, 500.0, 50.0);
  Router router{net};
  Infrastructure infra{{station(1, 5), station(2, 20)}};
  OperatorConfig cfg;
  std::vector<Vehicle> fleet;
  std::unique_ptr<FleetOperator> op;
};

TEST_F(OperatorFixture, ReservationHorizon) {
  make(1);
  auto r = traveler(1, 3, 4, 0.0);
  r.earliest_pickup = 7200.0;
  auto offer = op->user_request(r, 0.0);
  ASSERT_TRUE(offer.valid);
  EXPECT_TRUE(op->request(1)->reservation);
  EXPECT_TRUE(op->request(1)->batch_excluded);
  op->lock_booking(1, 0.0);
  op->prepare(7200.0 - 1800.0 - 60.0);
  EXPECT_TRUE(op->request(1)->batch_excluded);
  op->prepare(7200.0 - 1800.0);
  EXPECT_FALSE(op->request(1)->batch_excluded);
}

TEST_F(OperatorFixture, PastEarliestPickupIsOnDemand) {
  make(1);
  auto r = traveler(1, 3, 4, 600.0);
  r.earliest_pickup = 300.0;
  ASSERT_TRUE(op->user_request(r, 600.0).valid);
  EXPECT_FALSE(op->request(1)->reservation);
  EXPECT_EQ(op->request(1)->earliest_pickup, 600'000);
}

TEST_F(OperatorFixture, ChargingTriggerThreshold) {
  cfg.soc_threshold = 0.2;
  fleet.emplace_back(0, 0, ev(), Position::at_node(0), 0.9);
  fleet.emplace_back(1, 0, ev(), Position::at_node(8), 0.15);
  op = std::make_unique<FleetOperator>(cfg, fleet, router, &infra, nullptr, nullptr);
  EXPECT_EQ(op->run_charging(0.0), 1u);
  EXPECT_TRUE(op->plan_of(0).stops.empty());
  const auto& stops = op->plan_of(1).stops;
  ASSERT_EQ(stops.size(), 1u);
  EXPECT_EQ(stops[0].kind, StopKind::charge);
  EXPECT_EQ(stops[0].node, 5);
  op->apply_plans(0.0);
  ASSERT_FALSE(fleet[1].legs().empty());
  EXPECT_EQ(fleet[1].legs().back().kind, LegKind::charge);
  // A second trigger does not book again.
  EXPECT_EQ(op->run_charging(60.0), 0u);
}

TEST_F(OperatorFixture, UtilizationSizingActivates) {
  cfg.fleet_sizing_mode = FleetSizingMode::utilization;
  cfg.fleet_sizing_target = 0.8;
  cfg.fleet_sizing_band = 0.05;
  // Spaced out so that every request gets its own vehicle.
  std::vector<NodeId> starts;
  for (NodeId i = 0; i < 22; ++i) starts.push_back(4 * i);
  make(22, starts);
  fleet[20].set_active(false);
  fleet[21].set_active(false);
  for (RequestId i = 0; i < 19; ++i) {
    auto offer = op->user_request(traveler(i, static_cast<NodeId>(4 * i), static_cast<NodeId>(4 * i + 1)), 0.0);
    ASSERT_TRUE(offer.valid);
    op->lock_booking(i, 0.0);
  }
  EXPECT_NEAR(op->utilization(), 0.95, 1e-12);
  auto d = op->run_fleet_sizing(0.0);
  EXPECT_FALSE(d.activate.empty());
  EXPECT_TRUE(d.deactivate.empty());
  EXPECT_TRUE(fleet[20].active());
}

TEST_F(OperatorFixture, ScheduleAtCurrentCountKeepsFleet) {
  cfg.fleet_sizing_mode = FleetSizingMode::schedule;
  cfg.fleet_sizing_schedule = {{0.0, 3}};
  make(3);
  auto d = op->run_fleet_sizing(100.0);
  EXPECT_TRUE(d.activate.empty());
  EXPECT_TRUE(d.deactivate.empty());
}

TEST_F(OperatorFixture, UtilizationPricing) {
  cfg.pricing_mode = PricingMode::utilization;
  cfg.pricing_alpha = 2.0;
  cfg.pricing_u_ref = 0.7;
  std::vector<NodeId> starts;
  for (NodeId i = 0; i < 10; ++i) starts.push_back(4 * i);
  make(10, starts);
  for (RequestId i = 0; i < 9; ++i) {
    ASSERT_TRUE(op->user_request(traveler(i, static_cast<NodeId>(4 * i), static_cast<NodeId>(4 * i + 1)), 0.0).valid);
    op->lock_booking(i, 0.0);
  }
  EXPECT_NEAR(op->update_pricing(0.0), 1.4, 1e-12);
}

TEST_F(OperatorFixture, RemovingUnknownRequestChangesNothing) {
  make(1);
  ASSERT_TRUE(op->user_request(traveler(1, 2, 3), 0.0).valid);
  op->lock_booking(1, 0.0);
  const auto before = op->plan_of(0).stops;
  op->remove_request(99, 0.0);
  EXPECT_EQ(op->plan_of(0).stops, before);
}

TEST_F(OperatorFixture, RemovingAPooledRequestKeepsPlanFeasible) {
  make(1);
  ASSERT_TRUE(op->user_request(traveler(1, 2, 6), 0.0).valid);
  op->lock_booking(1, 0.0);
  ASSERT_TRUE(op->user_request(traveler(2, 3, 5), 0.0).valid);
  op->lock_booking(2, 0.0);
  TravelOracle oracle(router, 0.0);
  const auto& snap = op->snapshot_of(0);
  const auto pooled = check_feasibility_and_cost(snap, op->plan_of(0).stops, op->requests(), oracle);
  ASSERT_TRUE(pooled.feasible);
  EXPECT_EQ(op->plan_of(0).pickups(), (std::vector<RequestId>{1, 2}));
  op->remove_request(2, 0.0);
  const auto rest = check_feasibility_and_cost(snap, op->plan_of(0).stops, op->requests(), oracle);
  EXPECT_TRUE(rest.feasible);
  EXPECT_LE(rest.cost, pooled.cost);
  EXPECT_EQ(op->plan_of(0).pickups(), (std::vector<RequestId>{1}));
}

TEST_F(OperatorFixture, BookedRequestSurvivesReoptimization) {
  make(3, {0, 10, 20});
  ASSERT_TRUE(op->user_request(traveler(1, 12, 14), 0.0).valid);
  op->lock_booking(1, 0.0);
  op->reoptimize(0.0);
  bool found = false;
  for (VehicleId v = 0; v < 3; ++v) {
    const auto p = op->plan_of(v).pickups();
    found = found || std::find(p.begin(), p.end(), 1) != p.end();
  }
  EXPECT_TRUE(found);
}

TEST_F(OperatorFixture, RejectionWhenNoVehicleCanMakeIt) {
  make(1, {0});
  // Node 29 is 29 * 50 s away, far beyond the waiting limit.
  EXPECT_FALSE(op->user_request(traveler(1, 29, 28), 0.0).valid);
  EXPECT_EQ(op->request(1), nullptr);
}
