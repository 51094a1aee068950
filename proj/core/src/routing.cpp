#include "fleetsim/routing.h"

#include <algorithm>
#include <atomic>

#include <fmt/format.h>

namespace fleetsim {

PathCost edge_cost(double distance, Seconds tt) {
  // Every edge costs at least one unit so that optimal paths stay simple.
  return {std::max<Millis>(1, static_cast<Millis>(std::llround(tt * 1000.0))),
          std::max<std::int64_t>(1, static_cast<std::int64_t>(std::llround(distance * 1000.0)))};
}

PathCost edge_share_cost(double distance, Seconds tt, double share) {
  return {static_cast<Millis>(std::llround(share * tt * 1000.0)),
          static_cast<std::int64_t>(std::llround(share * distance * 1000.0))};
}

std::string_view to_string(BackendKind kind) {
  switch (kind) {
    case BackendKind::label_setting: return "label_setting";
    case BackendKind::bidirectional: return "bidirectional";
    case BackendKind::tt_matrix: return "tt_matrix";
    case BackendKind::partial_matrix: return "partial_matrix";
  }
  return "?";
}

BackendKind parse_backend(std::string_view name) {
  if (name == "label_setting" || name == "dijkstra") return BackendKind::label_setting;
  if (name == "bidirectional") return BackendKind::bidirectional;
  if (name == "tt_matrix") return BackendKind::tt_matrix;
  if (name == "partial_matrix") return BackendKind::partial_matrix;
  throw ValidationError(fmt::format("unknown routing backend '{}'", name));
}

namespace {

struct HeapItem {
  PathCost cost;
  NodeId node;
  bool operator>(const HeapItem& o) const {
    if (cost != o.cost) return cost > o.cost;
    return node > o.node;
  }
};

/// Label-setting search state with O(1) reset through generation stamps.
struct SearchState {
  std::vector<PathCost> dist;
  std::vector<std::uint32_t> labelled;
  std::vector<std::uint32_t> settled;
  std::vector<HeapItem> heap;
  std::uint32_t stamp = 0;

  void reset(std::size_t n) {
    if (dist.size() != n) {
      dist.assign(n, PathCost::infinite());
      labelled.assign(n, 0);
      settled.assign(n, 0);
      stamp = 0;
    }
    if (++stamp == 0) {
      std::fill(labelled.begin(), labelled.end(), 0);
      std::fill(settled.begin(), settled.end(), 0);
      stamp = 1;
    }
    heap.clear();
  }
  bool has_label(NodeId v) const { return labelled[static_cast<std::size_t>(v)] == stamp; }
  bool is_settled(NodeId v) const { return settled[static_cast<std::size_t>(v)] == stamp; }
  PathCost label(NodeId v) const { return has_label(v) ? dist[static_cast<std::size_t>(v)] : PathCost::infinite(); }
  void settle(NodeId v) { settled[static_cast<std::size_t>(v)] = stamp; }

  bool relax(NodeId v, PathCost c) {
    auto i = static_cast<std::size_t>(v);
    if (labelled[i] == stamp && !(c < dist[i])) return false;
    labelled[i] = stamp;
    dist[i] = c;
    heap.push_back({c, v});
    std::push_heap(heap.begin(), heap.end(), std::greater<>());
    return true;
  }
  /// Pops stale entries; returns the top live item or nullopt.
  std::optional<HeapItem> top() {
    while (!heap.empty()) {
      const auto& it = heap.front();
      if (is_settled(it.node) || it.cost != dist[static_cast<std::size_t>(it.node)]) {
        std::pop_heap(heap.begin(), heap.end(), std::greater<>());
        heap.pop_back();
        continue;
      }
      return it;
    }
    return std::nullopt;
  }
  HeapItem pop() {
    auto it = heap.front();
    std::pop_heap(heap.begin(), heap.end(), std::greater<>());
    heap.pop_back();
    settle(it.node);
    return it;
  }
};

/// Direction-aware adjacency over the network with snapshot costs.
struct Graph {
  const Network& net;
  const std::vector<PathCost>& cost;

  template <typename F>
  void forward(NodeId u, F&& f) const {
    for (auto e : net.out_edges(u)) f(net.edge(e).to, cost[static_cast<std::size_t>(e)]);
  }
  template <typename F>
  void backward(NodeId u, F&& f) const {
    for (auto e : net.in_edges(u)) f(net.edge(e).from, cost[static_cast<std::size_t>(e)]);
  }
};

/// Settles nodes in forward direction from s until `stop(node)` returns true
/// or the graph is exhausted.
template <typename Stop>
void run_forward(const Graph& g, SearchState& st, NodeId s, Stop&& stop) {
  st.reset(g.net.node_count());
  st.relax(s, PathCost{});
  while (auto top = st.top()) {
    auto item = st.pop();
    if (stop(item.node)) return;
    g.forward(item.node, [&](NodeId v, const PathCost& w) {
      if (!st.is_settled(v)) st.relax(v, item.cost + w);
    });
  }
}

std::vector<PathCost> snapshot_costs(const Network& net, Seconds t) {
  std::vector<PathCost> out(net.edge_count());
  for (std::size_t i = 0; i < net.edge_count(); ++i) {
    const auto& e = net.edge(static_cast<EdgeId>(i));
    out[i] = edge_cost(e.distance, net.edge_travel_time(static_cast<EdgeId>(i), t));
  }
  return out;
}

/// Lexicographically smallest optimal path once a forward search from s has
/// settled d: walk from s, always taking the smallest-id neighbour on a tight
/// edge that can still reach d through tight edges.
std::vector<NodeId> extract_lexmin_path(const Graph& g, SearchState& st, NodeId s, NodeId d,
                                        std::vector<std::uint32_t>& mark, std::uint32_t mark_stamp) {
  std::vector<NodeId> stack{d};
  mark[static_cast<std::size_t>(d)] = mark_stamp;
  while (!stack.empty()) {
    auto v = stack.back();
    stack.pop_back();
    const auto dv = st.label(v);
    g.backward(v, [&](NodeId u, const PathCost& w) {
      if (mark[static_cast<std::size_t>(u)] == mark_stamp || !st.is_settled(u)) return;
      if (st.label(u) + w == dv) {
        mark[static_cast<std::size_t>(u)] = mark_stamp;
        stack.push_back(u);
      }
    });
  }
  std::vector<NodeId> path{s};
  NodeId u = s;
  while (u != d) {
    NodeId next = kNoNode;
    const auto du = st.label(u);
    g.forward(u, [&](NodeId v, const PathCost& w) {
      if (next != kNoNode) return;  // adjacency is sorted by id
      if (mark[static_cast<std::size_t>(v)] == mark_stamp && st.is_settled(v) && du + w == st.label(v)) next = v;
    });
    if (next == kNoNode) throw ConsistencyError("shortest path reconstruction failed");
    path.push_back(next);
    u = next;
  }
  return path;
}

}  // namespace

struct Router::Counters {
  std::atomic<std::uint64_t> queries{0};
  std::atomic<std::uint64_t> store_hits{0};
  std::atomic<std::uint64_t> searches{0};
  std::atomic<std::uint64_t> table_lookups{0};
  std::atomic<std::uint64_t> snapshot_rebuilds{0};
};

struct Router::Snapshot {
  int epoch = -2;
  std::uint64_t revision = 0;
  Seconds built_for = 0.0;
  std::vector<PathCost> edge_cost;
  std::vector<Seconds> edge_tt;
  std::unique_ptr<TravelTimeMatrix> matrix;
  std::vector<int> hub_index;
  std::size_t hub_count = 0;
  std::vector<PathCost> hub_table;
};

struct Router::Workspace {
  SearchState fwd;
  SearchState bwd;
  std::vector<std::uint32_t> mark;
  std::uint32_t mark_stamp = 0;

  std::uint32_t next_mark(std::size_t n) {
    if (mark.size() != n) {
      mark.assign(n, 0);
      mark_stamp = 0;
    }
    if (++mark_stamp == 0) {
      std::fill(mark.begin(), mark.end(), 0);
      mark_stamp = 1;
    }
    return mark_stamp;
  }
};

class Router::WorkspaceLease {
 public:
  explicit WorkspaceLease(Router& r) : router_(r) {
    std::lock_guard lock(r.ws_mutex_);
    if (!r.free_workspaces_.empty()) {
      ws_ = std::move(r.free_workspaces_.back());
      r.free_workspaces_.pop_back();
    } else {
      ws_ = std::make_unique<Workspace>();
    }
  }
  ~WorkspaceLease() {
    std::lock_guard lock(router_.ws_mutex_);
    router_.free_workspaces_.push_back(std::move(ws_));
  }
  Workspace& operator*() { return *ws_; }

 private:
  Router& router_;
  std::unique_ptr<Workspace> ws_;
};

Router::Router(const Network& net, RouterOptions options)
    : net_(net), options_(std::move(options)), snap_(std::make_unique<Snapshot>()),
      counters_(std::make_unique<Counters>()) {
  for (auto h : options_.hubs)
    if (!net_.has_node(h)) throw ValidationError(fmt::format("hub node {} does not exist", h));
  if (options_.kind == BackendKind::tt_matrix) {
    const auto n = net_.node_count();
    if (n * n > options_.max_matrix_cells)
      throw ValidationError(fmt::format("travel time matrix for {} nodes exceeds the cap of {} cells", n,
                                        options_.max_matrix_cells));
  }
}

Router::~Router() = default;

void Router::ensure_snapshot(Seconds t) {
  const int epoch = net_.profile_epoch(t);
  {
    std::shared_lock lock(snap_mutex_);
    if (snap_->epoch == epoch && snap_->revision == net_.revision()) return;
  }
  std::unique_lock lock(snap_mutex_);
  if (snap_->epoch == epoch && snap_->revision == net_.revision()) return;
  auto snap = std::make_unique<Snapshot>();
  snap->epoch = epoch;
  snap->revision = net_.revision();
  snap->built_for = t;
  snap->edge_tt = net_.travel_times_at(t);
  snap->edge_cost.resize(net_.edge_count());
  for (std::size_t i = 0; i < net_.edge_count(); ++i)
    snap->edge_cost[i] = edge_cost(net_.edge(static_cast<EdgeId>(i)).distance, snap->edge_tt[i]);
  if (options_.kind == BackendKind::tt_matrix) {
    snap->matrix = std::make_unique<TravelTimeMatrix>(build_tt_matrix(net_, t, options_.max_matrix_cells));
  } else if (options_.kind == BackendKind::partial_matrix) {
    auto hubs = options_.hubs;
    std::sort(hubs.begin(), hubs.end());
    hubs.erase(std::unique(hubs.begin(), hubs.end()), hubs.end());
    snap->hub_index.assign(net_.node_count(), -1);
    for (std::size_t i = 0; i < hubs.size(); ++i) snap->hub_index[static_cast<std::size_t>(hubs[i])] = static_cast<int>(i);
    snap->hub_count = hubs.size();
    snap->hub_table.assign(hubs.size() * hubs.size(), PathCost::infinite());
    Graph g{net_, snap->edge_cost};
    SearchState st;
    for (std::size_t i = 0; i < hubs.size(); ++i) {
      run_forward(g, st, hubs[i], [](NodeId) { return false; });
      for (std::size_t j = 0; j < hubs.size(); ++j) snap->hub_table[i * hubs.size() + j] = st.label(hubs[j]);
    }
  }
  snap_ = std::move(snap);
  ++counters_->snapshot_rebuilds;
  std::unique_lock store_lock(store_mutex_);
  store_.clear();
}

void Router::invalidate_store() {
  std::unique_lock lock(store_mutex_);
  store_.clear();
}

std::size_t Router::store_size() const {
  std::shared_lock lock(store_mutex_);
  return store_.size();
}

RouterStats Router::stats() const {
  return {counters_->queries.load(), counters_->store_hits.load(), counters_->searches.load(),
          counters_->table_lookups.load(), counters_->snapshot_rebuilds.load()};
}

const TravelTimeMatrix* Router::matrix(Seconds t) {
  ensure_snapshot(t);
  std::shared_lock lock(snap_mutex_);
  return snap_->matrix.get();
}

PathCost Router::search_cost(NodeId s, NodeId d, Workspace& ws) {
  ++counters_->searches;
  Graph g{net_, snap_->edge_cost};
  if (options_.kind != BackendKind::bidirectional) {
    run_forward(g, ws.fwd, s, [d](NodeId v) { return v == d; });
    return ws.fwd.label(d);
  }
  // Bidirectional label setting; stops once the two frontiers cannot improve
  // the best meeting cost.
  auto& f = ws.fwd;
  auto& b = ws.bwd;
  f.reset(net_.node_count());
  b.reset(net_.node_count());
  f.relax(s, PathCost{});
  b.relax(d, PathCost{});
  PathCost best = PathCost::infinite();
  while (true) {
    auto tf = f.top();
    auto tb = b.top();
    if (!tf || !tb) break;
    if (!(tf->cost + tb->cost < best)) break;
    const bool go_forward = !(tb->cost < tf->cost);
    if (go_forward) {
      auto item = f.pop();
      g.forward(item.node, [&](NodeId v, const PathCost& w) {
        auto c = item.cost + w;
        if (!f.is_settled(v)) f.relax(v, c);
        if (b.has_label(v)) best = std::min(best, c + b.label(v));
      });
    } else {
      auto item = b.pop();
      g.backward(item.node, [&](NodeId v, const PathCost& w) {
        auto c = item.cost + w;
        if (!b.is_settled(v)) b.relax(v, c);
        if (f.has_label(v)) best = std::min(best, c + f.label(v));
      });
    }
  }
  return best;
}

PathCost Router::node_cost(NodeId s, NodeId d) {
  if (s == d) return PathCost{};
  const std::uint64_t key = (static_cast<std::uint64_t>(static_cast<std::uint32_t>(s)) << 32) | static_cast<std::uint32_t>(d);
  if (options_.with_store) {
    std::shared_lock lock(store_mutex_);
    auto it = store_.find(key);
    if (it != store_.end()) {
      ++counters_->store_hits;
      return it->second;
    }
  }
  PathCost c;
  if (options_.kind == BackendKind::tt_matrix) {
    ++counters_->table_lookups;
    c = snap_->matrix->cost(s, d);
  } else if (options_.kind == BackendKind::partial_matrix && snap_->hub_index[static_cast<std::size_t>(s)] >= 0 &&
             snap_->hub_index[static_cast<std::size_t>(d)] >= 0) {
    ++counters_->table_lookups;
    c = snap_->hub_table[static_cast<std::size_t>(snap_->hub_index[static_cast<std::size_t>(s)]) * snap_->hub_count +
                         static_cast<std::size_t>(snap_->hub_index[static_cast<std::size_t>(d)])];
  } else {
    WorkspaceLease lease(*this);
    c = search_cost(s, d, *lease);
  }
  if (options_.with_store) {
    std::unique_lock lock(store_mutex_);
    store_.emplace(key, c);
  }
  return c;
}

std::vector<PathCost> Router::search_one_to_many(NodeId s, std::span<const NodeId> targets, Workspace& ws) {
  ++counters_->searches;
  Graph g{net_, snap_->edge_cost};
  auto mark = ws.next_mark(net_.node_count());
  std::size_t remaining = 0;
  for (auto v : targets) {
    if (ws.mark[static_cast<std::size_t>(v)] != mark) {
      ws.mark[static_cast<std::size_t>(v)] = mark;
      ++remaining;
    }
  }
  run_forward(g, ws.fwd, s, [&](NodeId v) {
    if (ws.mark[static_cast<std::size_t>(v)] == mark) --remaining;
    return remaining == 0;
  });
  std::vector<PathCost> out(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) out[i] = ws.fwd.label(targets[i]);
  return out;
}

PathCost Router::offset_from(const Position& origin, NodeId& exit) const {
  if (!origin.end_node) {
    exit = origin.start_node;
    return {};
  }
  exit = *origin.end_node;
  auto e = static_cast<std::size_t>(net_.edge_id(origin.start_node, *origin.end_node));
  return edge_share_cost(net_.edges()[e].distance, snap_->edge_tt[e], 1.0 - origin.fraction);
}

PathCost Router::offset_to(const Position& destination, NodeId& entry) const {
  entry = destination.start_node;
  if (!destination.end_node) return {};
  auto e = static_cast<std::size_t>(net_.edge_id(destination.start_node, *destination.end_node));
  return edge_share_cost(net_.edges()[e].distance, snap_->edge_tt[e], destination.fraction);
}

PathCost Router::combine(const Position& origin, const Position& destination, PathCost between) const {
  NodeId exit = kNoNode;
  NodeId entry = kNoNode;
  auto best = offset_from(origin, exit) + between + offset_to(destination, entry);
  if (origin.end_node && destination.end_node && origin.start_node == destination.start_node &&
      *origin.end_node == *destination.end_node && destination.fraction >= origin.fraction) {
    auto e = static_cast<std::size_t>(net_.edge_id(origin.start_node, *origin.end_node));
    best = std::min(best, edge_share_cost(net_.edges()[e].distance, snap_->edge_tt[e],
                                          destination.fraction - origin.fraction));
  }
  return best;
}

PathCost Router::cost(NodeId origin, NodeId destination, Seconds t) {
  return cost(Position::at_node(origin), Position::at_node(destination), t);
}

PathCost Router::cost(const Position& origin, const Position& destination, Seconds t) {
  net_.validate(origin);
  net_.validate(destination);
  ++counters_->queries;
  if (origin == destination) return {};
  ensure_snapshot(t);
  std::shared_lock lock(snap_mutex_);
  NodeId exit = kNoNode;
  NodeId entry = kNoNode;
  offset_from(origin, exit);
  offset_to(destination, entry);
  return combine(origin, destination, node_cost(exit, entry));
}

std::vector<PathCost> Router::costs_from(const Position& origin, std::span<const NodeId> targets, Seconds t) {
  net_.validate(origin);
  for (auto v : targets)
    if (!net_.has_node(v)) throw ConsistencyError(fmt::format("target node {} does not exist", v));
  counters_->queries += targets.size();
  ensure_snapshot(t);
  std::shared_lock lock(snap_mutex_);
  NodeId exit = kNoNode;
  const auto head = offset_from(origin, exit);
  std::vector<PathCost> out(targets.size(), PathCost::infinite());
  const bool searchable = options_.kind == BackendKind::label_setting || options_.kind == BackendKind::bidirectional;
  if (!searchable) {
    for (std::size_t i = 0; i < targets.size(); ++i)
      out[i] = combine(origin, Position::at_node(targets[i]), node_cost(exit, targets[i]));
  } else {
    std::vector<NodeId> missing;
    std::vector<std::size_t> missing_idx;
    for (std::size_t i = 0; i < targets.size(); ++i) {
      const std::uint64_t key =
          (static_cast<std::uint64_t>(static_cast<std::uint32_t>(exit)) << 32) | static_cast<std::uint32_t>(targets[i]);
      if (exit == targets[i]) {
        out[i] = head;
        continue;
      }
      if (options_.with_store) {
        std::shared_lock slock(store_mutex_);
        auto it = store_.find(key);
        if (it != store_.end()) {
          ++counters_->store_hits;
          out[i] = head + it->second;
          continue;
        }
      }
      missing.push_back(targets[i]);
      missing_idx.push_back(i);
    }
    if (!missing.empty()) {
      WorkspaceLease lease(*this);
      auto found = search_one_to_many(exit, missing, *lease);
      for (std::size_t k = 0; k < missing.size(); ++k) {
        out[missing_idx[k]] = head + found[k];
        if (options_.with_store) {
          const std::uint64_t key =
              (static_cast<std::uint64_t>(static_cast<std::uint32_t>(exit)) << 32) | static_cast<std::uint32_t>(missing[k]);
          std::unique_lock slock(store_mutex_);
          store_.emplace(key, found[k]);
        }
      }
    }
  }
  for (std::size_t i = 0; i < targets.size(); ++i)
    if (origin == Position::at_node(targets[i])) out[i] = PathCost{};
  return out;
}

std::vector<std::vector<TravelInfo>> Router::travel_info_matrix(std::span<const Position> origins,
                                                                std::span<const Position> destinations, Seconds t) {
  std::vector<std::vector<TravelInfo>> out(origins.size(), std::vector<TravelInfo>(destinations.size()));
  if (origins.empty() || destinations.empty()) return out;
  std::vector<NodeId> entries(destinations.size());
  for (std::size_t j = 0; j < destinations.size(); ++j) {
    net_.validate(destinations[j]);
    entries[j] = destinations[j].start_node;
  }
  for (std::size_t i = 0; i < origins.size(); ++i) {
    auto between = costs_from(origins[i], entries, t);
    std::shared_lock lock(snap_mutex_);
    for (std::size_t j = 0; j < destinations.size(); ++j) {
      if (origins[i] == destinations[j]) {
        out[i][j] = TravelInfo{0.0, 0.0};
        continue;
      }
      // costs_from already includes the origin's leading share.
      NodeId exit = kNoNode;
      auto head = offset_from(origins[i], exit);
      auto node_part = between[j].finite() ? between[j] - head : PathCost::infinite();
      if (exit == entries[j]) node_part = PathCost{};
      out[i][j] = TravelInfo::from_cost(combine(origins[i], destinations[j], node_part));
    }
  }
  return out;
}

std::optional<std::vector<NodeId>> Router::node_path(NodeId s, NodeId d) {
  if (s == d) return std::vector<NodeId>{s};
  if (options_.kind == BackendKind::tt_matrix) {
    auto r = snap_->matrix->route(s, d);
    if (!r) return std::nullopt;
    return r->nodes;
  }
  Graph g{net_, snap_->edge_cost};
  WorkspaceLease lease(*this);
  auto& ws = *lease;
  ++counters_->searches;
  if (options_.kind == BackendKind::bidirectional) {
    const auto target = search_cost(s, d, ws);
    if (!target.finite()) return std::nullopt;
    // Greedy lexicographic walk; exact distances to d come from resuming the
    // backward search as far as each candidate needs.
    auto& b = ws.bwd;
    auto dist_to_d = [&](NodeId v, PathCost bound) -> PathCost {
      while (!b.is_settled(v)) {
        auto top = b.top();
        if (!top || bound < top->cost) return PathCost::infinite();
        auto item = b.pop();
        g.backward(item.node, [&](NodeId u, const PathCost& w) {
          if (!b.is_settled(u)) b.relax(u, item.cost + w);
        });
      }
      return b.label(v);
    };
    std::vector<NodeId> path{s};
    NodeId u = s;
    PathCost g_u{};
    while (u != d) {
      NodeId next = kNoNode;
      PathCost next_cost{};
      for (auto e : net_.out_edges(u)) {
        const auto v = net_.edge(e).to;
        const auto w = snap_->edge_cost[static_cast<std::size_t>(e)];
        const auto reached = g_u + w;
        if (target < reached) continue;
        const auto rest = target - reached;
        if (dist_to_d(v, rest) == rest) {
          next = v;
          next_cost = reached;
          break;
        }
      }
      if (next == kNoNode) throw ConsistencyError("bidirectional path reconstruction failed");
      path.push_back(next);
      u = next;
      g_u = next_cost;
    }
    return path;
  }
  run_forward(g, ws.fwd, s, [d](NodeId v) { return v == d; });
  if (!ws.fwd.is_settled(d)) return std::nullopt;
  return extract_lexmin_path(g, ws.fwd, s, d, ws.mark, ws.next_mark(net_.node_count()));
}

std::optional<Route> Router::route(const Position& origin, const Position& destination, Seconds t) {
  net_.validate(origin);
  net_.validate(destination);
  ++counters_->queries;
  ensure_snapshot(t);
  std::shared_lock lock(snap_mutex_);
  NodeId exit = kNoNode;
  NodeId entry = kNoNode;
  const auto head = offset_from(origin, exit);
  const auto tail = offset_to(destination, entry);
  if (origin == destination) return Route{{exit}};
  const auto via_nodes = head + node_cost(exit, entry) + tail;
  const auto best = combine(origin, destination, node_cost(exit, entry));
  if (!best.finite()) return std::nullopt;
  if (best < via_nodes) return Route{{exit}};  // stays on the shared edge
  auto nodes = node_path(exit, entry);
  if (!nodes) return std::nullopt;
  Route r{std::move(*nodes)};
  if (destination.end_node) r.nodes.push_back(*destination.end_node);
  return r;
}

std::optional<Route> TravelTimeMatrix::route(NodeId i, NodeId j) const {
  if (!cost(i, j).finite()) return std::nullopt;
  Route r{{i}};
  NodeId u = i;
  while (u != j) {
    u = successor(u, j);
    if (u == kNoNode) return std::nullopt;
    r.nodes.push_back(u);
  }
  return r;
}

TravelTimeMatrix build_tt_matrix(const Network& net, Seconds t, std::size_t max_cells) {
  const auto n = net.node_count();
  if (n * n > max_cells)
    throw ValidationError(fmt::format("travel time matrix for {} nodes exceeds the cap of {} cells", n, max_cells));
  TravelTimeMatrix m;
  m.n_ = n;
  m.built_at_ = t;
  m.cost_.assign(n * n, PathCost::infinite());
  m.succ_.assign(n * n, kNoNode);
  const auto costs = snapshot_costs(net, t);
  Graph g{net, costs};
  SearchState st;
  for (std::size_t i = 0; i < n; ++i) {
    run_forward(g, st, static_cast<NodeId>(i), [](NodeId) { return false; });
    for (std::size_t j = 0; j < n; ++j) m.cost_[i * n + j] = st.label(static_cast<NodeId>(j));
  }
  // successor[i][j]: smallest-id neighbour v of i with w(i,v) + D[v][j] == D[i][j].
  for (std::size_t i = 0; i < n; ++i) {
    const auto out = net.out_edges(static_cast<NodeId>(i));
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j || !m.cost_[i * n + j].finite()) continue;
      for (auto e : out) {
        const auto v = static_cast<std::size_t>(net.edge(e).to);
        if (costs[static_cast<std::size_t>(e)] + m.cost_[v * n + j] == m.cost_[i * n + j]) {
          m.succ_[i * n + j] = static_cast<NodeId>(v);
          break;
        }
      }
    }
  }
  return m;
}

PathCost route_cost(const Network& net, const Route& route, Seconds t) {
  PathCost total{};
  for (std::size_t i = 1; i < route.nodes.size(); ++i) {
    auto e = net.edge_id(route.nodes[i - 1], route.nodes[i]);
    total = total + edge_cost(net.edge(e).distance, net.edge_travel_time(e, t));
  }
  return total;
}

}  // namespace fleetsim
