#include <gtest/gtest.h>

#include "fleetsim/routing.h"
#include "fleetsim/routing_bench.h"
#include "test_support.h"

using namespace fleetsim;
using fleetsim::testing::bellman_ford;
using fleetsim::testing::line_network;
using fleetsim::testing::random_network;
using fleetsim::testing::oracle_route_cost;

namespace {

RouterOptions backend(BackendKind k, bool store = false, std::vector<NodeId> hubs = {}) {
  RouterOptions o;
  o.kind = k;
  o.with_store = store;
  o.hubs = std::move(hubs);
  return o;
}

const BackendKind kAll[] = {BackendKind::label_setting, BackendKind::bidirectional, BackendKind::tt_matrix,
                            BackendKind::partial_matrix};

}  // namespace

class AllBackends : public ::testing::TestWithParam<BackendKind> {};

TEST_P(AllBackends, LineGraphQueries) {
  auto net = line_network(3, 100.0, 10.0);
  Router r(net, backend(GetParam(), false, {0, 2}));
  EXPECT_EQ(r.travel_info(0, 0, 0.0), (TravelInfo{0.0, 0.0}));
  EXPECT_EQ(r.travel_info(0, 2, 0.0), (TravelInfo{20.0, 200.0}));
  const auto half = r.travel_info(Position::on_edge(0, 1, 0.5), Position::at_node(1), 0.0);
  EXPECT_DOUBLE_EQ(half.travel_time, 5.0);
  EXPECT_DOUBLE_EQ(half.distance, 50.0);
  auto route = r.route(Position::at_node(0), Position::at_node(2), 0.0);
  ASSERT_TRUE(route.has_value());
  EXPECT_EQ(route->nodes, (std::vector<NodeId>{0, 1, 2}));
  auto self = r.route(Position::at_node(0), Position::at_node(0), 0.0);
  ASSERT_TRUE(self.has_value());
  EXPECT_EQ(self->nodes, (std::vector<NodeId>{0}));
}

TEST_P(AllBackends, UnreachableIsAValue) {
  Network net({{0, 0, 0}, {1, 1, 0}}, {{0, 1, 100.0, 10.0}});
  Router r(net, backend(GetParam(), false, {0}));
  EXPECT_FALSE(r.travel_info(1, 0, 0.0).reachable());
  EXPECT_FALSE(r.route(Position::at_node(1), Position::at_node(0), 0.0).has_value());
}

TEST_P(AllBackends, MatchesBellmanFordOnRandomGraphs) {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    auto net = random_network(40, 80, seed);
    Router r(net, backend(GetParam(), false, {0, 5, 17}));
    for (NodeId s = 0; s < 40; s += 3) {
      const auto ref = bellman_ford(net, s, 0.0);
      for (NodeId d = 0; d < 40; ++d) {
        EXPECT_EQ(r.cost(s, d, 0.0), ref[static_cast<std::size_t>(d)]) << s << "->" << d;
        auto route = r.route(Position::at_node(s), Position::at_node(d), 0.0);
        ASSERT_TRUE(route.has_value());
        EXPECT_EQ(oracle_route_cost(net, *route, 0.0), ref[static_cast<std::size_t>(d)]);
      }
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Routing, AllBackends, ::testing::ValuesIn(kAll),
                         [](const auto& info) { return std::string(to_string(info.param)); });

TEST(Routing, EqualCostTieIsDeterministicAcrossBackends) {
  // Square 0-1-3 and 0-2-3 with identical costs.
  Network net({{0, 0, 0}, {1, 1, 0}, {2, 0, 1}, {3, 1, 1}},
              {{0, 1, 100.0, 10.0}, {1, 3, 100.0, 10.0}, {0, 2, 100.0, 10.0}, {2, 3, 100.0, 10.0}});
  std::optional<Route> first;
  for (auto k : kAll) {
    Router r(net, backend(k, false, {0, 3}));
    auto route = r.route(Position::at_node(0), Position::at_node(3), 0.0);
    ASSERT_TRUE(route.has_value());
    if (!first) first = route;
    EXPECT_EQ(*route, *first) << to_string(k);
  }
}

TEST(Routing, MatrixQueryMatchesSingleQueries) {
  auto net = line_network(3);
  Router r(net);
  std::vector<Position> pts{Position::at_node(0), Position::at_node(1), Position::at_node(2)};
  auto m = r.travel_info_matrix(pts, pts, 0.0);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(m[i][j], r.travel_info(pts[i], pts[j], 0.0));
  EXPECT_TRUE(r.travel_info_matrix({}, pts, 0.0).empty());
  auto one = r.travel_info_matrix(std::span(pts).first(1), std::span(pts).subspan(2, 1), 0.0);
  EXPECT_EQ(one[0][0], r.travel_info(pts[0], pts[2], 0.0));
}

TEST(Routing, TravelTimeMatrixBuild) {
  Network net({{0, 0, 0}, {1, 1, 0}}, {{0, 1, 100.0, 10.0}});
  auto m = build_tt_matrix(net, 0.0);
  EXPECT_DOUBLE_EQ(m.travel_info(0, 1).travel_time, 10.0);
  EXPECT_FALSE(m.travel_info(1, 0).reachable());
  EXPECT_DOUBLE_EQ(m.travel_info(0, 0).travel_time, 0.0);
  EXPECT_DOUBLE_EQ(m.travel_info(1, 1).travel_time, 0.0);

  auto g = random_network(30, 60, 9);
  auto mm = build_tt_matrix(g, 0.0);
  Router r(g);
  for (NodeId a = 0; a < 30; a += 4)
    for (NodeId b = 0; b < 30; b += 5) {
      auto route = mm.route(a, b);
      ASSERT_TRUE(route.has_value());
      EXPECT_EQ(*route, *r.route(Position::at_node(a), Position::at_node(b), 0.0));
    }
}

TEST(Routing, StoreServesRepeatsAndFollowsProfileChanges) {
  auto net = line_network(3);
  Router r(net, backend(BackendKind::label_setting, true));
  r.invalidate_store();
  EXPECT_EQ(r.store_size(), 0u);
  const auto a = r.travel_info(0, 2, 0.0);
  const auto hits0 = r.stats().store_hits;
  const auto b = r.travel_info(0, 2, 0.0);
  EXPECT_EQ(a, b);
  EXPECT_EQ(r.stats().store_hits, hits0 + 1);
  net.set_profile(TravelTimeProfile::scaling({{0.0, 2.0}}));
  EXPECT_DOUBLE_EQ(r.travel_info(0, 2, 0.0).travel_time, 40.0);
}

TEST(Routing, SnapshotFollowsTimeDependentFactors) {
  auto net = line_network(3);
  net.set_profile(TravelTimeProfile::scaling({{100.0, 1.5}}));
  for (auto k : kAll) {
    Router r(net, backend(k, true, {1}));
    EXPECT_DOUBLE_EQ(r.travel_info(0, 2, 0.0).travel_time, 20.0);
    EXPECT_DOUBLE_EQ(r.travel_info(0, 2, 200.0).travel_time, 30.0);
    EXPECT_DOUBLE_EQ(r.travel_info(0, 2, 50.0).travel_time, 20.0);
  }
}

TEST(Routing, FractionalOriginAndDestination) {
  auto net = line_network(4);
  Router r(net);
  const auto c = r.travel_info(Position::on_edge(0, 1, 0.25), Position::on_edge(2, 3, 0.5), 0.0);
  // 7.5 s to node 1, 10 s to node 2, 5 s into the last edge.
  EXPECT_DOUBLE_EQ(c.travel_time, 22.5);
  EXPECT_DOUBLE_EQ(c.distance, 225.0);
  auto route = r.route(Position::on_edge(0, 1, 0.25), Position::on_edge(2, 3, 0.5), 0.0);
  ASSERT_TRUE(route.has_value());
  EXPECT_EQ(route->nodes, (std::vector<NodeId>{1, 2, 3}));
}

TEST(Routing, OneToManyMatchesSingles) {
  auto net = random_network(25, 50, 4);
  Router r(net, backend(BackendKind::bidirectional));
  std::vector<NodeId> targets{0, 3, 7, 24, 3};
  auto costs = r.costs_from(Position::at_node(11), targets, 0.0);
  for (std::size_t i = 0; i < targets.size(); ++i) EXPECT_EQ(costs[i], r.cost(11, targets[i], 0.0));
}

TEST(RoutingBench, PrecheckPassesAndTimesEveryBackend) {
  auto net = make_grid_network({6, 6, 100.0, 10.0});
  auto rep = benchmark_routing(net, 500, 3, 0.0, {0, 35});
  EXPECT_EQ(rep.queries, 500u);
  EXPECT_NE(rep.find(BackendKind::tt_matrix, false), nullptr);
  EXPECT_NE(rep.find(BackendKind::label_setting, true), nullptr);
  EXPECT_NE(rep.find(BackendKind::partial_matrix, false), nullptr);
  EXPECT_EQ(routing_workload(net, 50, 3), routing_workload(net, 50, 3));
}
