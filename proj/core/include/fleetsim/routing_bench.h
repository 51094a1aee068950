#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fleetsim/network.h"
#include "fleetsim/routing.h"

namespace fleetsim {

struct BackendTiming {
  BackendKind kind = BackendKind::label_setting;
  bool with_store = false;
  Seconds setup_seconds = 0.0;  // preprocessing, e.g. the matrix build
  Seconds query_seconds = 0.0;
  std::size_t queries = 0;
  std::string label() const;
};

struct RoutingBenchReport {
  std::size_t nodes = 0;
  std::size_t edges = 0;
  std::size_t queries = 0;
  std::vector<BackendTiming> timings;
  const BackendTiming* find(BackendKind kind, bool with_store) const;
};

/// Seeded origin-destination workload over distinct node pairs.
std::vector<std::pair<NodeId, NodeId>> routing_workload(const Network& network, std::size_t queries,
                                                        std::uint64_t seed);

/// Checks that every backend returns the same cost for every query, then
/// times the workload on each backend. Throws ConsistencyError on the first
/// mismatch. Hubs for partial_matrix are taken from `hubs`; that backend is
/// skipped when none are given.
RoutingBenchReport benchmark_routing(const Network& network, std::size_t queries, std::uint64_t seed,
                                     Seconds t = 0.0, const std::vector<NodeId>& hubs = {},
                                     std::size_t precheck_queries = 2000);

}  // namespace fleetsim
