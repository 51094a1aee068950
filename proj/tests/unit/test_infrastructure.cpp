#include <gtest/gtest.h>

#include <atomic>
#include <thread>

#include "fleetsim/infrastructure.h"
#include "test_support.h"

using namespace fleetsim;
using fleetsim::testing::line_network;

namespace {

ChargingStation station(StationId id, NodeId node, std::vector<double> powers,
                        StationAccess access = StationAccess::public_access, OperatorId owner = -1, int parking = 0) {
  ChargingStation s;
  s.station_id = id;
  s.node = node;
  for (std::size_t i = 0; i < powers.size(); ++i) s.sockets.push_back({static_cast<SocketId>(i), powers[i]});
  s.access = access;
  s.operator_id = owner;
  s.parking_spots = parking;
  return s;
}

VehicleType ev() {
  VehicleType t;
  t.type_id = "ev";
  t.battery_kwh = 50.0;
  t.range_m = 100000.0;
  return t;
}

BookingToken token(Seconds s, Seconds e, VehicleId v = 1) { return {1, 0, v, 0, s, e}; }

}  // namespace

TEST(Charging, EstimatedDuration) {
  EXPECT_DOUBLE_EQ(estimate_charge_duration(1.0, 50.0, 25.0), 0.0);
  EXPECT_DOUBLE_EQ(estimate_charge_duration(0.5, 50.0, 25.0), 3600.0);
}

TEST(Charging, DepotsOfOtherOperatorsAreExcluded) {
  auto net = line_network(3);
  Router router(net);
  Infrastructure infra({station(1, 2, {25.0}, StationAccess::depot, 1, 2)});
  EXPECT_TRUE(infra.query_charging_options(router, Position::at_node(0), 0.0, 0.5, ev(), 2, 0.0, 3).empty());
  auto own = infra.query_charging_options(router, Position::at_node(0), 0.0, 0.5, ev(), 1, 0.0, 3);
  ASSERT_EQ(own.size(), 1u);
  EXPECT_DOUBLE_EQ(own[0].arrival_time, 20.0);
}

TEST(Charging, OptionsOrderedByTravelTime) {
  auto net = line_network(4);
  Router router(net);
  Infrastructure infra({station(1, 3, {25.0}), station(2, 1, {25.0}), station(3, 2, {25.0})});
  auto opts = infra.query_charging_options(router, Position::at_node(0), 0.0, 0.5, ev(), 0, 0.0, 2);
  ASSERT_EQ(opts.size(), 2u);
  EXPECT_EQ(opts[0].station_id, 2);
  EXPECT_EQ(opts[1].station_id, 3);
}

TEST(Charging, BookingsOnASocketNeverOverlap) {
  Infrastructure infra({station(1, 0, {25.0})});
  auto b1 = infra.book(token(0.0, 100.0));
  EXPECT_DOUBLE_EQ(b1.start_time, 0.0);
  EXPECT_THROW(infra.book(token(50.0, 150.0, 2)), BookingConflictError);
  const Seconds gap = infra.earliest_gap(1, 0, 20.0, 60.0);
  EXPECT_GE(gap, 100.0);
  auto b2 = infra.book(token(gap, gap + 60.0, 2));
  EXPECT_GE(b2.start_time, b1.expected_end_time);
  EXPECT_TRUE(booking_log_is_exclusive(infra.booking_log()));
}

TEST(Charging, ConcurrentBookingOfOneWindow) {
  Infrastructure infra({station(1, 0, {25.0})});
  std::atomic<int> ok{0}, conflicts{0};
  std::vector<std::thread> ts;
  for (int i = 0; i < 8; ++i)
    ts.emplace_back([&, i] {
      try {
        infra.book(token(0.0, 100.0, i));
        ++ok;
      } catch (const BookingConflictError&) {
        ++conflicts;
      }
    });
  for (auto& t : ts) t.join();
  EXPECT_EQ(ok.load(), 1);
  EXPECT_EQ(conflicts.load(), 7);
}

TEST(Charging, ReleaseSemantics) {
  Infrastructure infra({station(1, 0, {25.0})});
  auto b = infra.book(token(0.0, 100.0));
  infra.release(b.booking_id, 100.0);
  EXPECT_DOUBLE_EQ(infra.booking(b.booking_id).expected_end_time, 100.0);
  auto c = infra.book(token(200.0, 400.0));
  infra.release(c.booking_id, 250.0);
  EXPECT_DOUBLE_EQ(infra.earliest_gap(1, 0, 250.0, 50.0), 250.0);
  EXPECT_THROW(infra.release(999, 0.0), LookupError);
  EXPECT_TRUE(booking_log_is_exclusive(infra.booking_log()));
}

TEST(Charging, ReplayDetectsOverlap) {
  Booking a;
  a.booking_id = 1;
  a.station_id = 1;
  a.start_time = 0.0;
  a.expected_end_time = 100.0;
  Booking b = a;
  b.booking_id = 2;
  b.start_time = 50.0;
  b.expected_end_time = 120.0;
  std::vector<BookingEvent> log{{BookingEventKind::book, 0.0, a}, {BookingEventKind::book, 0.0, b}};
  EXPECT_FALSE(booking_log_is_exclusive(log));
}

TEST(Depots, ParkingCapacity) {
  auto net = line_network(3);
  Router router(net);
  Infrastructure infra({station(1, 2, {}, StationAccess::depot, 0, 1)});
  auto d = infra.nearest_free_depot(router, Position::at_node(0), 0, 0.0);
  ASSERT_TRUE(d.has_value());
  infra.reserve_parking(*d, 5, 0);
  EXPECT_EQ(infra.parked_count(1), 1);
  EXPECT_FALSE(infra.nearest_free_depot(router, Position::at_node(0), 0, 0.0).has_value());
  infra.release_parking(5, 0);
  EXPECT_TRUE(infra.nearest_free_depot(router, Position::at_node(0), 0, 0.0).has_value());
}
