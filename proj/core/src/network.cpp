#include "fleetsim/network.h"

#include <algorithm>
#include <map>

#include <fmt/format.h>

#include "fleetsim/csv.h"

namespace fleetsim {
namespace {

std::uint64_t edge_key(NodeId from, NodeId to) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(from)) << 32) |
         static_cast<std::uint32_t>(to);
}

void check_strictly_increasing(const std::vector<Seconds>& times) {
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1]))
      throw ValidationError(fmt::format("travel time breakpoints must be strictly increasing (t={} after t={})",
                                        times[i], times[i - 1]));
}

}  // namespace

TravelTimeProfile TravelTimeProfile::scaling(std::vector<std::pair<Seconds, double>> factors) {
  TravelTimeProfile p;
  p.mode_ = ProfileMode::scaling_factors;
  for (auto& [t, f] : factors) {
    if (!(f > 0.0) || !std::isfinite(f))
      throw ValidationError(fmt::format("travel time factor at t={} must be positive, got {}", t, f));
    p.times_.push_back(t);
    p.factors_.push_back(f);
  }
  check_strictly_increasing(p.times_);
  return p;
}

TravelTimeProfile TravelTimeProfile::edge_table(
    std::vector<std::pair<Seconds, std::vector<EdgeTableEntry>>> tables) {
  TravelTimeProfile p;
  p.mode_ = ProfileMode::edge_table;
  for (auto& [t, entries] : tables) {
    p.times_.push_back(t);
    p.tables_.push_back(std::move(entries));
  }
  check_strictly_increasing(p.times_);
  return p;
}

int TravelTimeProfile::active_index(Seconds t) const {
  auto it = std::upper_bound(times_.begin(), times_.end(), t);
  return static_cast<int>(it - times_.begin()) - 1;
}

Network::Network(std::vector<Node> nodes, std::vector<Edge> edges, TravelTimeProfile profile)
    : nodes_(std::move(nodes)), edges_(std::move(edges)) {
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (nodes_[i].id != static_cast<NodeId>(i))
      throw ValidationError(fmt::format("node ids must be dense 0..N-1; position {} holds id {}", i, nodes_[i].id));
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    const auto& e = edges_[i];
    if (!has_node(e.from) || !has_node(e.to))
      throw StructuralError(fmt::format("edge {} ({} -> {}) references a node that does not exist", i, e.from, e.to));
    if (e.from == e.to) throw ValidationError(fmt::format("edge {} is a self loop at node {}", i, e.from));
    if (!(e.distance > 0.0)) throw ValidationError(fmt::format("edge {} -> {} has non-positive distance {}", e.from, e.to, e.distance));
    if (!(e.base_travel_time > 0.0))
      throw ValidationError(fmt::format("edge {} -> {} has non-positive travel time {}", e.from, e.to, e.base_travel_time));
    total_distance_ += e.distance;
  }
  build_index();
  apply_profile(std::move(profile));
}

void Network::build_index() {
  const auto n = nodes_.size();
  out_offsets_.assign(n + 1, 0);
  in_offsets_.assign(n + 1, 0);
  for (const auto& e : edges_) {
    ++out_offsets_[static_cast<std::size_t>(e.from) + 1];
    ++in_offsets_[static_cast<std::size_t>(e.to) + 1];
  }
  for (std::size_t i = 0; i < n; ++i) {
    out_offsets_[i + 1] += out_offsets_[i];
    in_offsets_[i + 1] += in_offsets_[i];
  }
  out_list_.assign(edges_.size(), 0);
  in_list_.assign(edges_.size(), 0);
  auto out_fill = out_offsets_;
  auto in_fill = in_offsets_;
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    const auto& e = edges_[i];
    out_list_[out_fill[static_cast<std::size_t>(e.from)]++] = static_cast<EdgeId>(i);
    in_list_[in_fill[static_cast<std::size_t>(e.to)]++] = static_cast<EdgeId>(i);
    auto [it, inserted] = edge_lookup_.emplace(edge_key(e.from, e.to), static_cast<EdgeId>(i));
    if (!inserted) throw ValidationError(fmt::format("duplicate edge {} -> {}", e.from, e.to));
  }
  // Adjacency sorted by neighbour id keeps every scan order deterministic.
  for (std::size_t v = 0; v < n; ++v) {
    std::sort(out_list_.begin() + static_cast<std::ptrdiff_t>(out_offsets_[v]),
              out_list_.begin() + static_cast<std::ptrdiff_t>(out_offsets_[v + 1]),
              [&](EdgeId a, EdgeId b) { return edges_[static_cast<std::size_t>(a)].to < edges_[static_cast<std::size_t>(b)].to; });
    std::sort(in_list_.begin() + static_cast<std::ptrdiff_t>(in_offsets_[v]),
              in_list_.begin() + static_cast<std::ptrdiff_t>(in_offsets_[v + 1]),
              [&](EdgeId a, EdgeId b) { return edges_[static_cast<std::size_t>(a)].from < edges_[static_cast<std::size_t>(b)].from; });
  }
}

void Network::apply_profile(TravelTimeProfile profile) {
  table_times_.clear();
  if (profile.mode() == ProfileMode::edge_table) {
    std::vector<Seconds> base(edges_.size());
    for (std::size_t i = 0; i < edges_.size(); ++i) base[i] = edges_[i].base_travel_time;
    for (const auto& table : profile.tables()) {
      // Edges not listed at a breakpoint keep their base travel time.
      auto times = base;
      for (const auto& entry : table) {
        auto id = find_edge(entry.from, entry.to);
        if (!id)
          throw StructuralError(fmt::format("travel time update references unknown edge {} -> {}", entry.from, entry.to));
        if (!(entry.travel_time > 0.0))
          throw ValidationError(fmt::format("travel time update for edge {} -> {} must be positive, got {}",
                                            entry.from, entry.to, entry.travel_time));
        times[static_cast<std::size_t>(*id)] = entry.travel_time;
      }
      table_times_.push_back(std::move(times));
    }
  }
  profile_ = std::move(profile);
}

void Network::set_profile(TravelTimeProfile profile) {
  apply_profile(std::move(profile));
  ++revision_;
}

std::optional<EdgeId> Network::find_edge(NodeId from, NodeId to) const {
  auto it = edge_lookup_.find(edge_key(from, to));
  if (it == edge_lookup_.end()) return std::nullopt;
  return it->second;
}

EdgeId Network::edge_id(NodeId from, NodeId to) const {
  auto id = find_edge(from, to);
  if (!id) throw LookupError(fmt::format("no edge {} -> {}", from, to));
  return *id;
}

std::span<const EdgeId> Network::out_edges(NodeId n) const {
  auto v = static_cast<std::size_t>(n);
  return {out_list_.data() + out_offsets_.at(v), out_offsets_.at(v + 1) - out_offsets_[v]};
}

std::span<const EdgeId> Network::in_edges(NodeId n) const {
  auto v = static_cast<std::size_t>(n);
  return {in_list_.data() + in_offsets_.at(v), in_offsets_.at(v + 1) - in_offsets_[v]};
}

Seconds Network::edge_travel_time(EdgeId e, Seconds t) const {
  if (e < 0 || static_cast<std::size_t>(e) >= edges_.size()) throw LookupError(fmt::format("unknown edge id {}", e));
  const auto idx = profile_.active_index(t);
  const auto base = edges_[static_cast<std::size_t>(e)].base_travel_time;
  if (idx < 0) return base;
  switch (profile_.mode()) {
    case ProfileMode::constant:
      return base;
    case ProfileMode::scaling_factors:
      return base * profile_.factors()[static_cast<std::size_t>(idx)];
    case ProfileMode::edge_table:
      return table_times_[static_cast<std::size_t>(idx)][static_cast<std::size_t>(e)];
  }
  return base;
}

std::vector<Seconds> Network::travel_times_at(Seconds t) const {
  std::vector<Seconds> out(edges_.size());
  for (std::size_t i = 0; i < edges_.size(); ++i) out[i] = edge_travel_time(static_cast<EdgeId>(i), t);
  return out;
}

double Network::average_velocity(Seconds t) const {
  if (edges_.empty()) throw ValidationError("average velocity of an empty network is undefined");
  double total_time = 0.0;
  for (std::size_t i = 0; i < edges_.size(); ++i) total_time += edge_travel_time(static_cast<EdgeId>(i), t);
  return total_distance_ / total_time;
}

void Network::validate(const Position& p) const {
  if (!has_node(p.start_node)) throw ConsistencyError(fmt::format("position references unknown node {}", p.start_node));
  if (!p.end_node) {
    if (p.fraction != 0.0) throw ConsistencyError("node position must have fraction 0");
    return;
  }
  if (!find_edge(p.start_node, *p.end_node))
    throw ConsistencyError(fmt::format("position on non-existent edge {} -> {}", p.start_node, *p.end_node));
  if (!(p.fraction >= 0.0 && p.fraction < 1.0))
    throw ConsistencyError(fmt::format("position fraction {} outside [0,1)", p.fraction));
}

void Network::validate(const Route& r) const {
  for (auto n : r.nodes)
    if (!has_node(n)) throw ConsistencyError(fmt::format("route references unknown node {}", n));
  for (std::size_t i = 1; i < r.nodes.size(); ++i)
    if (!find_edge(r.nodes[i - 1], r.nodes[i]))
      throw ConsistencyError(fmt::format("route step {} -> {} is not an edge", r.nodes[i - 1], r.nodes[i]));
}

TravelTimeProfile load_factor_profile(const std::filesystem::path& file) {
  auto table = csv::Table::read(file);
  std::vector<std::pair<Seconds, double>> factors;
  for (std::size_t r = 0; r < table.rows(); ++r)
    factors.emplace_back(table.get_double(r, "time"), table.get_double(r, "factor"));
  return TravelTimeProfile::scaling(std::move(factors));
}

TravelTimeProfile load_edge_table_profile(const std::filesystem::path& file) {
  auto table = csv::Table::read(file);
  // Rows are grouped by time; the file need not be sorted, but duplicate
  // times are merged and the resulting breakpoints are strictly increasing.
  std::map<Seconds, std::vector<TravelTimeProfile::EdgeTableEntry>> grouped;
  for (std::size_t r = 0; r < table.rows(); ++r) {
    grouped[table.get_double(r, "time")].push_back(
        {static_cast<NodeId>(table.get_int(r, "from_node")), static_cast<NodeId>(table.get_int(r, "to_node")),
         table.get_double(r, "travel_time")});
  }
  std::vector<std::pair<Seconds, std::vector<TravelTimeProfile::EdgeTableEntry>>> tables(grouped.begin(), grouped.end());
  return TravelTimeProfile::edge_table(std::move(tables));
}

Network load_network(const std::filesystem::path& nodes_file, const std::filesystem::path& edges_file,
                     const TravelTimeSources& tt_sources) {
  auto nodes_table = csv::Table::read(nodes_file);
  std::vector<Node> nodes(nodes_table.rows());
  std::vector<bool> seen(nodes_table.rows(), false);
  for (std::size_t r = 0; r < nodes_table.rows(); ++r) {
    auto id = nodes_table.get_int(r, "node_id");
    if (id < 0 || static_cast<std::size_t>(id) >= nodes.size() || seen[static_cast<std::size_t>(id)])
      throw ValidationError(fmt::format("{} line {}: node ids must be unique and dense in 0..{}", nodes_file.string(),
                                        nodes_table.line_of(r), nodes.size() - 1));
    seen[static_cast<std::size_t>(id)] = true;
    nodes[static_cast<std::size_t>(id)] = Node{static_cast<NodeId>(id), nodes_table.get_double_or(r, "x", 0.0),
                                               nodes_table.get_double_or(r, "y", 0.0)};
  }
  auto edges_table = csv::Table::read(edges_file);
  std::vector<Edge> edges;
  edges.reserve(edges_table.rows());
  for (std::size_t r = 0; r < edges_table.rows(); ++r) {
    Edge e{static_cast<NodeId>(edges_table.get_int(r, "from_node")), static_cast<NodeId>(edges_table.get_int(r, "to_node")),
           edges_table.get_double(r, "distance"), edges_table.get_double(r, "travel_time")};
    auto n = static_cast<NodeId>(nodes.size());
    if (e.from < 0 || e.from >= n || e.to < 0 || e.to >= n)
      throw StructuralError(fmt::format("{} line {}: edge {} -> {} references a node missing from {}", edges_file.string(),
                                        edges_table.line_of(r), e.from, e.to, nodes_file.string()));
    edges.push_back(e);
  }
  if (tt_sources.factors_file && tt_sources.edge_table_file)
    throw ValidationError("a network takes either a travel time factor file or an edge travel time file, not both");
  TravelTimeProfile profile;
  if (tt_sources.factors_file) profile = load_factor_profile(*tt_sources.factors_file);
  if (tt_sources.edge_table_file) profile = load_edge_table_profile(*tt_sources.edge_table_file);
  return Network(std::move(nodes), std::move(edges), std::move(profile));
}

AdvanceResult advance_position(const Network& net, const Position& position, const Route& route, Seconds duration,
                               Seconds t, std::optional<Seconds> frozen_edge_time) {
  if (duration < 0) throw ConsistencyError("advance duration must be non-negative");
  net.validate(position);
  AdvanceResult result;
  result.position = position;
  if (route.nodes.empty() || route.nodes.front() != position.start_node)
    throw ConsistencyError(fmt::format("position at node {} is not on the start of the route", position.start_node));
  const bool on_edge = position.end_node.has_value();
  if (on_edge && (route.nodes.size() < 2 || route.nodes[1] != *position.end_node))
    throw ConsistencyError(fmt::format("position on edge {} -> {} is not on the first route edge", position.start_node,
                                       *position.end_node));

  std::size_t idx = 0;
  double frac = position.fraction;
  bool entered = on_edge;
  Seconds used = 0.0;
  Seconds tt = 0.0;
  while (idx + 1 < route.nodes.size()) {
    const auto e = net.edge_id(route.nodes[idx], route.nodes[idx + 1]);
    const auto& edge = net.edge(e);
    if (entered && idx == 0 && frozen_edge_time) {
      tt = *frozen_edge_time;
    } else if (entered && idx == 0) {
      tt = net.edge_travel_time(e, t);
    } else {
      tt = net.edge_travel_time(e, t + used);
    }
    const Seconds rest = (1.0 - frac) * tt;
    const Seconds left = duration - used;
    if (left >= rest) {
      used += rest;
      result.distance += (1.0 - frac) * edge.distance;
      frac = 0.0;
      entered = false;
      ++idx;
      continue;
    }
    if (left > 0.0) {
      const double step = left / tt;
      frac += step;
      result.distance += step * edge.distance;
      used = duration;
      entered = true;
    }
    break;
  }
  result.time_consumed = used;
  if (idx + 1 >= route.nodes.size()) {
    result.position = Position::at_node(route.nodes.back());
    return result;
  }
  result.remaining.nodes.assign(route.nodes.begin() + static_cast<std::ptrdiff_t>(idx), route.nodes.end());
  if (entered) {
    result.position = Position::on_edge(route.nodes[idx], route.nodes[idx + 1], frac);
    result.current_edge_time = tt;
  } else {
    result.position = Position::at_node(route.nodes[idx]);
  }
  return result;
}

}  // namespace fleetsim
