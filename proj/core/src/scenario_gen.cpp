#include "fleetsim/scenario_gen.h"

#include <algorithm>
#include <fstream>
#include <numeric>

#include <fmt/format.h>

#include "fleetsim/csv.h"
#include "fleetsim/routing.h"

namespace fleetsim {

std::size_t SeededDraw::index(std::size_t n) {
  if (n == 0) throw ValidationError("cannot draw from an empty range");
  return std::min(n - 1, static_cast<std::size_t>(uniform() * static_cast<double>(n)));
}

Network make_grid_network(const GridSpec& spec) {
  if (spec.rows < 1 || spec.cols < 1) throw ValidationError("grid needs at least one row and one column");
  if (!(spec.edge_length > 0.0) || !(spec.speed > 0.0))
    throw ValidationError("grid edge length and speed must be positive");
  std::vector<Node> nodes;
  std::vector<Edge> edges;
  const auto id = [&](int r, int c) { return static_cast<NodeId>(r * spec.cols + c); };
  for (int r = 0; r < spec.rows; ++r)
    for (int c = 0; c < spec.cols; ++c) nodes.push_back({id(r, c), c * spec.edge_length, r * spec.edge_length});
  const Seconds tt = spec.edge_length / spec.speed;
  auto link = [&](NodeId a, NodeId b) {
    edges.push_back({a, b, spec.edge_length, tt});
    edges.push_back({b, a, spec.edge_length, tt});
  };
  for (int r = 0; r < spec.rows; ++r)
    for (int c = 0; c < spec.cols; ++c) {
      if (c + 1 < spec.cols) link(id(r, c), id(r, c + 1));
      if (r + 1 < spec.rows) link(id(r, c), id(r + 1, c));
    }
  return Network(std::move(nodes), std::move(edges));
}

std::vector<TravelerRequest> uniform_demand(const Network& network, std::size_t count, Seconds start, Seconds end,
                                            std::uint64_t seed) {
  std::vector<TravelerRequest> out;
  if (count == 0) return out;
  if (network.node_count() < 2) throw ValidationError("uniform demand needs at least two nodes");
  if (!(end > start)) throw ValidationError("uniform demand needs end > start");
  SeededDraw draw(seed);
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    TravelerRequest r;
    // Whole seconds keep request times exactly representable in the CSV.
    r.request_time = start + std::floor(draw.uniform() * (end - start));
    r.origin = static_cast<NodeId>(draw.index(network.node_count()));
    do {
      r.destination = static_cast<NodeId>(draw.index(network.node_count()));
    } while (r.destination == r.origin);
    out.push_back(r);
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const TravelerRequest& a, const TravelerRequest& b) { return a.request_time < b.request_time; });
  for (std::size_t i = 0; i < out.size(); ++i) out[i].id = static_cast<RequestId>(i);
  return out;
}

void write_network_csv(const Network& network, const std::filesystem::path& nodes_file,
                       const std::filesystem::path& edges_file) {
  std::ofstream nodes(nodes_file, std::ios::binary | std::ios::trunc);
  std::ofstream edges(edges_file, std::ios::binary | std::ios::trunc);
  if (!nodes || !edges) throw ValidationError(fmt::format("cannot write network files in '{}'", nodes_file.parent_path().string()));
  nodes << "node_id,x,y\n";
  for (std::size_t i = 0; i < network.node_count(); ++i) {
    const auto& n = network.node(static_cast<NodeId>(i));
    nodes << n.id << ',' << csv::fmt_real(n.x) << ',' << csv::fmt_real(n.y) << '\n';
  }
  edges << "from_node,to_node,distance,travel_time\n";
  for (std::size_t i = 0; i < network.edge_count(); ++i) {
    const auto& e = network.edge(static_cast<EdgeId>(i));
    edges << e.from << ',' << e.to << ',' << csv::fmt_real(e.distance) << ',' << csv::fmt_real(e.base_travel_time)
          << '\n';
  }
}

void write_demand_csv(std::span<const TravelerRequest> requests, const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError(fmt::format("cannot write '{}'", file.string()));
  const bool with_ep = std::any_of(requests.begin(), requests.end(),
                                   [](const TravelerRequest& r) { return r.earliest_pickup.has_value(); });
  out << "request_id,rq_time,start,end" << (with_ep ? ",earliest_pickup" : "") << '\n';
  for (const auto& r : requests) {
    out << r.id << ',' << csv::fmt_real(r.request_time) << ',' << r.origin << ',' << r.destination;
    if (with_ep) out << ',' << (r.earliest_pickup ? csv::fmt_real(*r.earliest_pickup) : std::string());
    out << '\n';
  }
}

GridBundle write_grid_bundle(const std::filesystem::path& dir, const GridSpec& spec, std::size_t requests,
                             Seconds start, Seconds end, std::uint64_t seed) {
  std::filesystem::create_directories(dir);
  GridBundle b{dir / "nodes.csv", dir / "edges.csv", dir / "demand.csv"};
  const auto net = make_grid_network(spec);
  write_network_csv(net, b.nodes_file, b.edges_file);
  write_demand_csv(uniform_demand(net, requests, start, end, seed), b.demand_file);
  return b;
}

std::vector<NodeId> draw_nodes(const Network& network, std::size_t k, std::uint64_t seed) {
  const std::size_t n = network.node_count();
  if (k > n) throw ValidationError(fmt::format("cannot draw {} distinct nodes from {}", k, n));
  std::vector<NodeId> pool(n);
  std::iota(pool.begin(), pool.end(), 0);
  SeededDraw draw(seed);
  // Partial Fisher-Yates.
  for (std::size_t i = 0; i < k; ++i) std::swap(pool[i], pool[i + draw.index(n - i)]);
  pool.resize(k);
  return pool;
}

std::vector<TravelTimeSample> sample_travel_times(const Network& network, std::size_t k, std::uint64_t seed,
                                                  std::span<const Seconds> times) {
  const auto nodes = draw_nodes(network, k, seed);
  Router router(network, RouterOptions{});
  std::vector<TravelTimeSample> out;
  for (Seconds t : times) {
    TravelTimeSample s;
    s.time = t;
    double sum = 0.0;
    for (NodeId a : nodes)
      for (NodeId b : nodes) {
        if (a == b) continue;
        const auto info = router.travel_info(a, b, t);
        if (!info.reachable()) {
          ++s.unreachable;
          continue;
        }
        ++s.pairs;
        sum += info.travel_time;
      }
    s.mean_travel_time = s.pairs > 0 ? sum / static_cast<double>(s.pairs) : 0.0;
    out.push_back(s);
  }
  return out;
}

}  // namespace fleetsim
