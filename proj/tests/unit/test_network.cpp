#include <gtest/gtest.h>

#include "fleetsim/csv.h"
#include "fleetsim/network.h"
#include "test_support.h"

using namespace fleetsim;
using fleetsim::testing::TempDir;
using fleetsim::testing::write_file;

namespace {

Network two_node() { return Network({{0, 0, 0}, {1, 100, 0}}, {{0, 1, 100.0, 10.0}}); }

Network triangle() {
  return Network({{0, 0, 0}, {1, 1, 0}, {2, 0, 1}}, {{0, 1, 100.0, 10.0}, {1, 2, 200.0, 20.0}, {2, 0, 300.0, 30.0}});
}

}  // namespace

TEST(Csv, SkipsCommentsAndBlankLines) {
  auto t = csv::Table::parse("a,b\n# note\n\n1, 2 \n3,4\n");
  ASSERT_EQ(t.rows(), 2u);
  EXPECT_EQ(t.get_int(0, "b"), 2);
  EXPECT_EQ(t.line_of(1), 5u);
  EXPECT_THROW(t.column("c"), ValidationError);
}

TEST(Csv, RealsUseSixDecimals) {
  EXPECT_EQ(csv::fmt_real(1.0), "1.000000");
  EXPECT_EQ(csv::fmt_real(-0.0000001), "0.000000");
  EXPECT_EQ(csv::fmt_real(2.5e-3), "0.002500");
}

TEST(Csv, BadNumberIsValidationError) {
  auto t = csv::Table::parse("a\nxyz\n");
  EXPECT_THROW(t.get_double(0, "a"), ValidationError);
}

TEST(Network, MinimalGraphHasConstantTimes) {
  auto net = two_node();
  EXPECT_EQ(net.node_count(), 2u);
  EXPECT_EQ(net.edge_count(), 1u);
  EXPECT_DOUBLE_EQ(net.edge_travel_time(0, 1, 0.0), 10.0);
  EXPECT_DOUBLE_EQ(net.edge_travel_time(0, 1, 1e6), 10.0);
}

TEST(Network, DanglingEdgeIsStructuralError) {
  EXPECT_THROW(Network({{0, 0, 0}, {1, 1, 0}}, {{0, 99, 10.0, 1.0}}), StructuralError);
}

TEST(Network, RejectsSparseIdsSelfLoopsAndDuplicates) {
  EXPECT_THROW(Network({{0, 0, 0}, {2, 1, 0}}, {}), ValidationError);
  EXPECT_THROW(Network({{0, 0, 0}, {1, 1, 0}}, {{1, 1, 10.0, 1.0}}), ValidationError);
  EXPECT_THROW(Network({{0, 0, 0}, {1, 1, 0}}, {{0, 1, 10.0, 1.0}, {0, 1, 20.0, 2.0}}), ValidationError);
  EXPECT_THROW(Network({{0, 0, 0}, {1, 1, 0}}, {{0, 1, 10.0, 0.0}}), ValidationError);
}

TEST(Network, LoadsFilesWithFactorProfile) {
  TempDir dir;
  write_file(dir / "nodes.csv", "node_id,x,y\n0,0,0\n1,1,0\n2,0,1\n");
  write_file(dir / "edges.csv", "from_node,to_node,distance,travel_time\n0,1,100,10\n1,2,200,20\n2,0,300,30\n");
  write_file(dir / "factors.csv", "time,factor\n3600,1.5\n");
  TravelTimeSources src;
  src.factors_file = dir / "factors.csv";
  auto net = load_network(dir / "nodes.csv", dir / "edges.csv", src);
  EXPECT_DOUBLE_EQ(net.edge_travel_time(0, 1, 4000.0), 15.0);
  EXPECT_DOUBLE_EQ(net.edge_travel_time(1, 2, 4000.0), 30.0);
  EXPECT_DOUBLE_EQ(net.edge_travel_time(2, 0, 4000.0), 45.0);
  EXPECT_DOUBLE_EQ(net.edge_travel_time(2, 0, 3599.0), 30.0);
}

TEST(Network, MissingFileNamesThePath) {
  TempDir dir;
  write_file(dir / "nodes.csv", "node_id,x,y\n0,0,0\n");
  try {
    load_network(dir / "nodes.csv", dir / "nope.csv");
    FAIL() << "expected MissingFileError";
  } catch (const MissingFileError& e) {
    EXPECT_NE(std::string(e.what()).find("nope.csv"), std::string::npos);
  }
}

TEST(Network, ScalingFactorDoublesTime) {
  auto net = two_node();
  net.set_profile(TravelTimeProfile::scaling({{0.0, 2.0}}));
  EXPECT_DOUBLE_EQ(net.edge_travel_time(0, 1, 5.0), 20.0);
}

TEST(Network, EdgeTableUsesLastBreakpoint) {
  auto net = two_node();
  net.set_profile(TravelTimeProfile::edge_table({{7200.0, {{0, 1, 14.0}}}}));
  EXPECT_DOUBLE_EQ(net.edge_travel_time(0, 1, 7199.0), 10.0);
  EXPECT_DOUBLE_EQ(net.edge_travel_time(0, 1, 7200.0), 14.0);
  EXPECT_DOUBLE_EQ(net.edge_travel_time(0, 1, 9000.0), 14.0);
}

TEST(Network, ProfileUpdateBumpsRevision) {
  auto net = two_node();
  const auto r0 = net.revision();
  net.set_profile(TravelTimeProfile::scaling({{0.0, 1.2}}));
  EXPECT_GT(net.revision(), r0);
}

TEST(Network, AverageVelocity) {
  EXPECT_DOUBLE_EQ(two_node().average_velocity(0.0), 10.0);
  Network two({{0, 0, 0}, {1, 1, 0}, {2, 2, 0}}, {{0, 1, 100.0, 10.0}, {1, 2, 300.0, 20.0}});
  EXPECT_NEAR(two.average_velocity(0.0), 400.0 / 30.0, 1e-12);
}

TEST(Network, ScalingDividesVelocityExactly) {
  auto net = triangle();
  const double v0 = net.average_velocity(0.0);
  for (double k : {0.5, 1.5, 3.0}) {
    net.set_profile(TravelTimeProfile::scaling({{0.0, k}}));
    EXPECT_NEAR(net.average_velocity(10.0), v0 / k, 1e-12 * v0);
  }
}

TEST(AdvancePosition, StopsMidEdgeProportionally) {
  auto net = two_node();
  auto r = advance_position(net, Position::at_node(0), Route{{0, 1}}, 5.0, 0.0);
  EXPECT_EQ(r.position.start_node, 0);
  ASSERT_TRUE(r.position.end_node.has_value());
  EXPECT_EQ(*r.position.end_node, 1);
  EXPECT_DOUBLE_EQ(r.position.fraction, 0.5);
  EXPECT_DOUBLE_EQ(r.distance, 50.0);
  EXPECT_DOUBLE_EQ(r.time_consumed, 5.0);
}

TEST(AdvancePosition, ZeroDurationDoesNothing) {
  auto net = two_node();
  auto r = advance_position(net, Position::at_node(0), Route{{0, 1}}, 0.0, 0.0);
  EXPECT_TRUE(r.position == Position::at_node(0));
  EXPECT_DOUBLE_EQ(r.distance, 0.0);
}

TEST(AdvancePosition, RouteCompletionCapsConsumption) {
  auto net = two_node();
  auto r = advance_position(net, Position::at_node(0), Route{{0, 1}}, 30.0, 0.0);
  EXPECT_TRUE(r.position == Position::at_node(1));
  EXPECT_DOUBLE_EQ(r.distance, 100.0);
  EXPECT_DOUBLE_EQ(r.time_consumed, 10.0);
  EXPECT_TRUE(r.remaining.empty());
}

TEST(AdvancePosition, EdgeTimeIsFrozenAtEntry) {
  auto net = two_node();
  net.set_profile(TravelTimeProfile::scaling({{5.0, 2.0}}));
  // Entered at t=0 with 10 s; the factor change at t=5 does not apply.
  auto r = advance_position(net, Position::at_node(0), Route{{0, 1}}, 6.0, 0.0);
  EXPECT_NEAR(r.position.fraction, 0.6, 1e-12);
  ASSERT_TRUE(r.current_edge_time.has_value());
  EXPECT_DOUBLE_EQ(*r.current_edge_time, 10.0);
  auto r2 = advance_position(net, r.position, r.remaining, 10.0, 6.0, r.current_edge_time);
  EXPECT_NEAR(r2.time_consumed, 4.0, 1e-9);
  EXPECT_TRUE(r2.position == Position::at_node(1));
}
