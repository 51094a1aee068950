#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fleetsim/network.h"
#include "fleetsim/types.h"

namespace fleetsim {

using ZoneId = std::int32_t;

/// Node to zone mapping with one centroid node per zone.
class ZoneSystem {
 public:
  ZoneSystem() = default;
  /// Throws ValidationError when a zone has no node or its centroid lies
  /// outside the zone.
  ZoneSystem(std::map<NodeId, ZoneId> node_zone, std::map<ZoneId, NodeId> centroids);

  bool empty() const { return centroids_.empty(); }
  std::optional<ZoneId> zone_of(NodeId node) const;
  NodeId centroid(ZoneId zone) const;
  /// Sorted zone ids.
  std::vector<ZoneId> zones() const;
  const std::map<NodeId, ZoneId>& node_zones() const { return node_zone_; }
  /// Optional geometry per zone, carried as opaque text.
  std::map<ZoneId, std::string> geometry;

 private:
  std::map<NodeId, ZoneId> node_zone_;
  std::map<ZoneId, NodeId> centroids_;
};

/// Reads `node_id,zone_id` and `zone_id,centroid_node[,geometry]`.
ZoneSystem load_zones(const std::filesystem::path& node_zone_file, const std::filesystem::path& centroid_file,
                      const Network& network);

/// Expected requests per zone and time bin.
class DemandForecast {
 public:
  explicit DemandForecast(Seconds bin_size = 900.0) : bin_size_(bin_size) {}

  Seconds bin_size() const { return bin_size_; }
  void add(ZoneId zone, Seconds bin_start, double expected);
  /// Sum over bins whose start lies in [t, t + horizon).
  double expected(ZoneId zone, Seconds t, Seconds horizon) const;
  const std::map<std::pair<ZoneId, Seconds>, double>& bins() const { return bins_; }

 private:
  Seconds bin_size_;
  std::map<std::pair<ZoneId, Seconds>, double> bins_;
};

struct ForecastInput {
  Seconds request_time = 0.0;
  NodeId origin = kNoNode;
};

/// Perfect-foresight counts of request origins per zone and bin.
DemandForecast perfect_forecast(std::span<const ForecastInput> requests, const ZoneSystem& zones,
                                Seconds bin_size = 900.0);

/// Reads `zone_id,bin_start,expected_requests`.
DemandForecast load_forecast(const std::filesystem::path& file, Seconds bin_size = 900.0);

}  // namespace fleetsim
