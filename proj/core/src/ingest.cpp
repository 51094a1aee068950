#include "fleetsim/ingest.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "fleetsim/csv.h"
#include "fleetsim/scenario_gen.h"

namespace fleetsim {

Seconds parse_trip_time(const std::string& text) {
  const auto s = csv::trim(text);
  int y = 0, mo = 0, d = 0, h = 0, mi = 0;
  double sec = 0.0;
  if (s.size() >= 19 && s[4] == '-' && std::sscanf(s.c_str(), "%d-%d-%d %d:%d:%lf", &y, &mo, &d, &h, &mi, &sec) == 6)
    return h * 3600.0 + mi * 60.0 + sec;
  return csv::parse_double(s, "trip time");
}

NodeLocator::NodeLocator(const Network& network) : net_(network) {
  const std::size_t n = net_.node_count();
  if (n == 0) throw ValidationError("cannot snap onto an empty network");
  min_x_ = max_x_ = net_.node(0).x;
  min_y_ = max_y_ = net_.node(0).y;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& nd = net_.node(static_cast<NodeId>(i));
    min_x_ = std::min(min_x_, nd.x);
    max_x_ = std::max(max_x_, nd.x);
    min_y_ = std::min(min_y_, nd.y);
    max_y_ = std::max(max_y_, nd.y);
  }
  const double w = std::max(max_x_ - min_x_, 1e-12);
  const double h = std::max(max_y_ - min_y_, 1e-12);
  // About one node per cell.
  cell_ = std::max(std::sqrt(w * h / static_cast<double>(n)), std::max(w, h) / 4096.0);
  nx_ = static_cast<int>(w / cell_) + 1;
  ny_ = static_cast<int>(h / cell_) + 1;
  cells_.resize(static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_));
  for (std::size_t i = 0; i < n; ++i) {
    const auto& nd = net_.node(static_cast<NodeId>(i));
    const int cx = std::clamp(static_cast<int>((nd.x - min_x_) / cell_), 0, nx_ - 1);
    const int cy = std::clamp(static_cast<int>((nd.y - min_y_) / cell_), 0, ny_ - 1);
    cells_[static_cast<std::size_t>(cy) * nx_ + cx].push_back(static_cast<NodeId>(i));
  }
}

bool NodeLocator::inside(double x, double y, double margin) const {
  return x >= min_x_ - margin && x <= max_x_ + margin && y >= min_y_ - margin && y <= max_y_ + margin;
}

NodeId NodeLocator::nearest(double x, double y) const {
  const int cx = std::clamp(static_cast<int>(std::floor((x - min_x_) / cell_)), 0, nx_ - 1);
  const int cy = std::clamp(static_cast<int>(std::floor((y - min_y_) / cell_)), 0, ny_ - 1);
  NodeId best = kNoNode;
  double best_d = std::numeric_limits<double>::infinity();
  const int max_ring = std::max(nx_, ny_);
  for (int ring = 0; ring <= max_ring; ++ring) {
    for (int gy = cy - ring; gy <= cy + ring; ++gy) {
      if (gy < 0 || gy >= ny_) continue;
      for (int gx = cx - ring; gx <= cx + ring; ++gx) {
        if (gx < 0 || gx >= nx_) continue;
        if (std::max(std::abs(gx - cx), std::abs(gy - cy)) != ring) continue;
        for (NodeId id : cells_[static_cast<std::size_t>(gy) * nx_ + gx]) {
          const auto& nd = net_.node(id);
          const double d = (nd.x - x) * (nd.x - x) + (nd.y - y) * (nd.y - y);
          if (d < best_d || (d == best_d && id < best)) {
            best_d = d;
            best = id;
          }
        }
      }
    }
    // Every point outside the scanned square is at least ring * cell away
    // from the query cell.
    if (best != kNoNode) {
      const double reach = ring * cell_;
      if (reach * reach >= best_d) break;
    }
  }
  return best;
}

IngestReport ingest_taxi_trips(const std::filesystem::path& trips_file, const Network& network,
                               const IngestOptions& options) {
  if (!(options.subsample >= 0.0 && options.subsample <= 1.0))
    throw ValidationError(fmt::format("subsample rate {} outside [0,1]", options.subsample));
  const auto table = csv::Table::read(trips_file);
  const auto& c = options.columns;
  for (const auto* col : {&c.pickup_time, &c.pickup_x, &c.pickup_y, &c.dropoff_x, &c.dropoff_y}) table.column(*col);

  NodeLocator locator(network);
  SeededDraw draw(options.seed);
  IngestReport rep;
  rep.rows = table.rows();
  for (std::size_t i = 0; i < table.rows(); ++i) {
    TravelerRequest r;
    double px = 0, py = 0, dx = 0, dy = 0;
    try {
      r.request_time = parse_trip_time(table.get(i, c.pickup_time).value_or(""));
      px = csv::parse_double(table.get(i, c.pickup_x).value_or(""), c.pickup_x);
      py = csv::parse_double(table.get(i, c.pickup_y).value_or(""), c.pickup_y);
      dx = csv::parse_double(table.get(i, c.dropoff_x).value_or(""), c.dropoff_x);
      dy = csv::parse_double(table.get(i, c.dropoff_y).value_or(""), c.dropoff_y);
    } catch (const ValidationError&) {
      ++rep.invalid;
      continue;
    }
    if (!locator.inside(px, py, options.bbox_margin) || !locator.inside(dx, dy, options.bbox_margin)) {
      ++rep.outside_area;
      continue;
    }
    r.origin = locator.nearest(px, py);
    r.destination = locator.nearest(dx, dy);
    if (r.origin == r.destination) {
      ++rep.same_node;
      continue;
    }
    if (options.subsample < 1.0 && !(draw.uniform() < options.subsample)) {
      ++rep.not_sampled;
      continue;
    }
    rep.requests.push_back(r);
  }
  std::stable_sort(rep.requests.begin(), rep.requests.end(),
                   [](const TravelerRequest& a, const TravelerRequest& b) { return a.request_time < b.request_time; });
  for (std::size_t i = 0; i < rep.requests.size(); ++i) rep.requests[i].id = static_cast<RequestId>(i);
  return rep;
}

}  // namespace fleetsim
