#include "fleetsim/routing_bench.h"

#include <chrono>

#include <fmt/format.h>

#include "fleetsim/scenario_gen.h"

namespace fleetsim {

std::string BackendTiming::label() const {
  return with_store ? fmt::format("{}+store", to_string(kind)) : std::string(to_string(kind));
}

const BackendTiming* RoutingBenchReport::find(BackendKind kind, bool with_store) const {
  for (const auto& t : timings)
    if (t.kind == kind && t.with_store == with_store) return &t;
  return nullptr;
}

std::vector<std::pair<NodeId, NodeId>> routing_workload(const Network& network, std::size_t queries,
                                                        std::uint64_t seed) {
  const std::size_t n = network.node_count();
  if (n < 2) throw ValidationError("routing workload needs at least two nodes");
  SeededDraw draw(seed);
  std::vector<std::pair<NodeId, NodeId>> out;
  out.reserve(queries);
  while (out.size() < queries) {
    const auto a = static_cast<NodeId>(draw.index(n));
    const auto b = static_cast<NodeId>(draw.index(n));
    if (a != b) out.emplace_back(a, b);
  }
  return out;
}

RoutingBenchReport benchmark_routing(const Network& network, std::size_t queries, std::uint64_t seed, Seconds t,
                                     const std::vector<NodeId>& hubs, std::size_t precheck_queries) {
  using clock = std::chrono::steady_clock;
  const auto work = routing_workload(network, queries, seed);

  std::vector<RouterOptions> variants;
  for (auto kind : {BackendKind::label_setting, BackendKind::bidirectional, BackendKind::tt_matrix})
    for (bool store : {false, true}) {
      if (kind == BackendKind::tt_matrix && store) continue;
      RouterOptions o;
      o.kind = kind;
      o.with_store = store;
      variants.push_back(o);
    }
  if (!hubs.empty()) {
    RouterOptions o;
    o.kind = BackendKind::partial_matrix;
    o.hubs = hubs;
    variants.push_back(o);
  }

  // Equality precheck against label-setting on a prefix of the workload.
  {
    Router reference(network, variants.front());
    const std::size_t m = std::min(precheck_queries, work.size());
    std::vector<PathCost> expected(m);
    for (std::size_t i = 0; i < m; ++i) expected[i] = reference.cost(work[i].first, work[i].second, t);
    for (std::size_t v = 1; v < variants.size(); ++v) {
      Router r(network, variants[v]);
      for (std::size_t i = 0; i < m; ++i) {
        const auto c = r.cost(work[i].first, work[i].second, t);
        if (c != expected[i])
          throw ConsistencyError(fmt::format("backend {} disagrees on {}->{}: {} ms / {} mm vs {} ms / {} mm",
                                             to_string(variants[v].kind), work[i].first, work[i].second, c.time,
                                             c.dist, expected[i].time, expected[i].dist));
      }
    }
  }

  RoutingBenchReport rep;
  rep.nodes = network.node_count();
  rep.edges = network.edge_count();
  rep.queries = work.size();
  for (const auto& o : variants) {
    BackendTiming bt;
    bt.kind = o.kind;
    bt.with_store = o.with_store;
    bt.queries = work.size();
    const auto s0 = clock::now();
    Router r(network, o);
    if (o.kind == BackendKind::tt_matrix) r.matrix(t);
    const auto s1 = clock::now();
    Millis sink = 0;
    for (const auto& [a, b] : work) sink += r.cost(a, b, t).time;
    const auto s2 = clock::now();
    if (sink == -1) bt.queries = 0;  // keeps the loop observable
    bt.setup_seconds = std::chrono::duration<double>(s1 - s0).count();
    bt.query_seconds = std::chrono::duration<double>(s2 - s1).count();
    rep.timings.push_back(bt);
  }
  return rep;
}

}  // namespace fleetsim
