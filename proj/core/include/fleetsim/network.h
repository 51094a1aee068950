#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "fleetsim/types.h"

namespace fleetsim {

struct Node {
  NodeId id = kNoNode;
  double x = 0.0;
  double y = 0.0;
};

struct Edge {
  NodeId from = kNoNode;
  NodeId to = kNoNode;
  double distance = 0.0;       // meters
  Seconds base_travel_time = 0.0;
};

enum class ProfileMode { constant, edge_table, scaling_factors };

/// Piecewise-constant, right-continuous travel time profile. The active
/// breakpoint at t is the last one with activation_time <= t; before the
/// first breakpoint the base travel times apply.
class TravelTimeProfile {
 public:
  struct EdgeTableEntry {
    NodeId from;
    NodeId to;
    Seconds travel_time;
  };

  TravelTimeProfile() = default;

  static TravelTimeProfile constant() { return {}; }
  static TravelTimeProfile scaling(std::vector<std::pair<Seconds, double>> factors);
  static TravelTimeProfile edge_table(
      std::vector<std::pair<Seconds, std::vector<EdgeTableEntry>>> tables);

  ProfileMode mode() const { return mode_; }
  std::size_t breakpoint_count() const { return times_.size(); }
  const std::vector<Seconds>& breakpoint_times() const { return times_; }
  const std::vector<double>& factors() const { return factors_; }
  const std::vector<std::vector<EdgeTableEntry>>& tables() const { return tables_; }

  /// Index of the active breakpoint, -1 when base times apply.
  int active_index(Seconds t) const;

 private:
  ProfileMode mode_ = ProfileMode::constant;
  std::vector<Seconds> times_;
  std::vector<double> factors_;
  std::vector<std::vector<EdgeTableEntry>> tables_;
};

/// Directed road graph with time-dependent edge travel times.
///
/// Node ids are dense (0..N-1). Coordinates are carried as metadata only;
/// movement and distances always use edge attributes.
class Network {
 public:
  Network() = default;
  Network(std::vector<Node> nodes, std::vector<Edge> edges,
          TravelTimeProfile profile = TravelTimeProfile::constant());

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t edge_count() const { return edges_.size(); }
  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const Node& node(NodeId id) const { return nodes_.at(static_cast<std::size_t>(id)); }
  const Edge& edge(EdgeId id) const { return edges_.at(static_cast<std::size_t>(id)); }
  bool has_node(NodeId id) const { return id >= 0 && static_cast<std::size_t>(id) < nodes_.size(); }

  std::optional<EdgeId> find_edge(NodeId from, NodeId to) const;
  /// Throws LookupError when (from, to) is not an edge.
  EdgeId edge_id(NodeId from, NodeId to) const;

  std::span<const EdgeId> out_edges(NodeId n) const;
  std::span<const EdgeId> in_edges(NodeId n) const;

  const TravelTimeProfile& profile() const { return profile_; }
  /// Replaces the travel time profile; bumps revision() so routing stores
  /// know to drop cached results.
  void set_profile(TravelTimeProfile profile);
  std::uint64_t revision() const { return revision_; }

  Seconds edge_travel_time(EdgeId e, Seconds t) const;
  Seconds edge_travel_time(NodeId from, NodeId to, Seconds t) const { return edge_travel_time(edge_id(from, to), t); }
  /// Effective travel time of every edge at t, indexed by EdgeId.
  std::vector<Seconds> travel_times_at(Seconds t) const;
  int profile_epoch(Seconds t) const { return profile_.active_index(t); }

  /// Sum of edge distances over sum of effective edge travel times.
  double average_velocity(Seconds t) const;

  /// Throws ConsistencyError when the position is not valid on this graph.
  void validate(const Position& p) const;
  void validate(const Route& r) const;

  double total_distance() const { return total_distance_; }

 private:
  void build_index();
  void apply_profile(TravelTimeProfile profile);

  std::vector<Node> nodes_;
  std::vector<Edge> edges_;
  std::vector<std::size_t> out_offsets_;
  std::vector<EdgeId> out_list_;
  std::vector<std::size_t> in_offsets_;
  std::vector<EdgeId> in_list_;
  std::unordered_map<std::uint64_t, EdgeId> edge_lookup_;
  TravelTimeProfile profile_;
  // Per-breakpoint full travel time vectors for edge_table mode.
  std::vector<std::vector<Seconds>> table_times_;
  std::uint64_t revision_ = 0;
  double total_distance_ = 0.0;
};

/// Travel time source files for load_network.
struct TravelTimeSources {
  std::optional<std::filesystem::path> factors_file;     // time,factor
  std::optional<std::filesystem::path> edge_table_file;  // time,from_node,to_node,travel_time
};

Network load_network(const std::filesystem::path& nodes_file, const std::filesystem::path& edges_file,
                     const TravelTimeSources& tt_sources = {});

TravelTimeProfile load_factor_profile(const std::filesystem::path& file);
TravelTimeProfile load_edge_table_profile(const std::filesystem::path& file);

struct AdvanceResult {
  Position position;
  double distance = 0.0;
  Seconds time_consumed = 0.0;
  /// Node sequence still to drive; starts at position.start_node, empty once the route is done.
  Route remaining;
  /// Travel time frozen for the edge the position is on (mid-edge only).
  std::optional<Seconds> current_edge_time;
};

/// Moves along `route` for at most `duration` seconds starting at time t.
///
/// Each edge's travel time is frozen when it is entered; `frozen_edge_time`
/// supplies the value for an edge the position is already on (otherwise it
/// is evaluated at t). Within an edge, distance grows linearly with time.
AdvanceResult advance_position(const Network& net, const Position& position, const Route& route,
                               Seconds duration, Seconds t,
                               std::optional<Seconds> frozen_edge_time = std::nullopt);

}  // namespace fleetsim
