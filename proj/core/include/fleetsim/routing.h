#pragma once

#include <compare>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "fleetsim/network.h"

namespace fleetsim {

/// Exact path cost: travel time in milliseconds, then distance in
/// millimeters. Ordered lexicographically, so among time-optimal paths the
/// shortest one wins; integer addition makes every backend agree bit for bit.
struct PathCost {
  Millis time = 0;
  std::int64_t dist = 0;

  static constexpr PathCost infinite() { return {kInfiniteMillis, 0}; }
  bool finite() const { return time < kInfiniteMillis; }

  PathCost operator+(const PathCost& o) const {
    if (!finite() || !o.finite()) return infinite();
    return {time + o.time, dist + o.dist};
  }
  PathCost operator-(const PathCost& o) const { return {time - o.time, dist - o.dist}; }
  auto operator<=>(const PathCost&) const = default;
};

struct TravelInfo {
  Seconds travel_time = 0.0;
  double distance = 0.0;  // meters

  bool reachable() const { return std::isfinite(travel_time); }
  static TravelInfo unreachable() { return {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()}; }
  static TravelInfo from_cost(const PathCost& c) {
    if (!c.finite()) return unreachable();
    return {to_seconds(c.time), static_cast<double>(c.dist) / 1000.0};
  }
  bool operator==(const TravelInfo&) const = default;
};

/// Quantised cost of one full edge with travel time `tt`.
PathCost edge_cost(double distance, Seconds tt);
/// Quantised cost of a share in [0,1] of an edge.
PathCost edge_share_cost(double distance, Seconds tt, double share);

enum class BackendKind { label_setting, bidirectional, tt_matrix, partial_matrix };

std::string_view to_string(BackendKind kind);
BackendKind parse_backend(std::string_view name);

/// All-pairs shortest path table for one travel time snapshot.
class TravelTimeMatrix {
 public:
  TravelTimeMatrix() = default;

  std::size_t size() const { return n_; }
  Seconds built_at() const { return built_at_; }

  PathCost cost(NodeId i, NodeId j) const { return cost_[index(i, j)]; }
  TravelInfo travel_info(NodeId i, NodeId j) const { return TravelInfo::from_cost(cost(i, j)); }
  /// Next node after i on the canonical path to j; kNoNode if none.
  NodeId successor(NodeId i, NodeId j) const { return succ_[index(i, j)]; }
  std::optional<Route> route(NodeId i, NodeId j) const;

 private:
  friend TravelTimeMatrix build_tt_matrix(const Network&, Seconds, std::size_t);
  std::size_t index(NodeId i, NodeId j) const { return static_cast<std::size_t>(i) * n_ + static_cast<std::size_t>(j); }

  std::size_t n_ = 0;
  Seconds built_at_ = 0.0;
  std::vector<PathCost> cost_;
  std::vector<NodeId> succ_;
};

inline constexpr std::size_t kDefaultMatrixCellCap = 16'000'000;

/// Preprocesses the full table at snapshot t. Throws ValidationError when
/// |N|^2 exceeds max_cells.
TravelTimeMatrix build_tt_matrix(const Network& net, Seconds t, std::size_t max_cells = kDefaultMatrixCellCap);

struct RouterOptions {
  BackendKind kind = BackendKind::label_setting;
  bool with_store = false;
  /// Hub nodes for the partial_matrix backend.
  std::vector<NodeId> hubs;
  std::size_t max_matrix_cells = kDefaultMatrixCellCap;
};

struct RouterStats {
  std::uint64_t queries = 0;
  std::uint64_t store_hits = 0;
  std::uint64_t searches = 0;
  std::uint64_t table_lookups = 0;
  std::uint64_t snapshot_rebuilds = 0;
};

/// Shortest path queries over a Network using travel times frozen at the
/// query time (snapshot routing).
///
/// Every backend returns identical costs; routes are the lexicographically
/// smallest node sequence among optimal paths. The optional store memoises
/// node-to-node results and is emptied whenever the active travel times
/// change. Queries may run concurrently; the snapshot rebuild is exclusive.
class Router {
 public:
  explicit Router(const Network& net, RouterOptions options = {});
  ~Router();
  Router(const Router&) = delete;
  Router& operator=(const Router&) = delete;

  const Network& network() const { return net_; }
  const RouterOptions& options() const { return options_; }

  PathCost cost(const Position& origin, const Position& destination, Seconds t);
  PathCost cost(NodeId origin, NodeId destination, Seconds t);
  TravelInfo travel_info(const Position& origin, const Position& destination, Seconds t) {
    return TravelInfo::from_cost(cost(origin, destination, t));
  }
  TravelInfo travel_info(NodeId origin, NodeId destination, Seconds t) {
    return TravelInfo::from_cost(cost(origin, destination, t));
  }

  /// Node sequence realising travel_info(). A fractional origin yields a
  /// route starting at the end node of its edge; a fractional destination
  /// appends the end node of the destination edge.
  std::optional<Route> route(const Position& origin, const Position& destination, Seconds t);

  /// Element [i][j] equals travel_info(origins[i], destinations[j], t).
  std::vector<std::vector<TravelInfo>> travel_info_matrix(std::span<const Position> origins,
                                                          std::span<const Position> destinations, Seconds t);
  /// One-to-many costs from a position to nodes.
  std::vector<PathCost> costs_from(const Position& origin, std::span<const NodeId> targets, Seconds t);

  void invalidate_store();
  std::size_t store_size() const;
  RouterStats stats() const;

  /// The preprocessed table (tt_matrix backend only), synced to time t.
  const TravelTimeMatrix* matrix(Seconds t);

 private:
  struct Snapshot;
  struct Workspace;
  class WorkspaceLease;

  void ensure_snapshot(Seconds t);
  PathCost node_cost(NodeId s, NodeId d);
  PathCost search_cost(NodeId s, NodeId d, Workspace& ws);
  std::optional<std::vector<NodeId>> node_path(NodeId s, NodeId d);
  std::vector<PathCost> search_one_to_many(NodeId s, std::span<const NodeId> targets, Workspace& ws);
  PathCost offset_from(const Position& origin, NodeId& exit) const;
  PathCost offset_to(const Position& destination, NodeId& entry) const;
  PathCost combine(const Position& origin, const Position& destination, PathCost between) const;

  const Network& net_;
  RouterOptions options_;
  std::unique_ptr<Snapshot> snap_;
  mutable std::shared_mutex snap_mutex_;

  std::unordered_map<std::uint64_t, PathCost> store_;
  mutable std::shared_mutex store_mutex_;

  std::vector<std::unique_ptr<Workspace>> free_workspaces_;
  std::mutex ws_mutex_;

  struct Counters;
  std::unique_ptr<Counters> counters_;
};

/// Sum of quantised edge costs along a route at snapshot t (exact).
PathCost route_cost(const Network& net, const Route& route, Seconds t);

}  // namespace fleetsim
