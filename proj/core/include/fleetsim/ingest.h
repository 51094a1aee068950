#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fleetsim/demand.h"
#include "fleetsim/network.h"

namespace fleetsim {

/// Column names of the trip file. The defaults follow the NYC TLC yellow
/// taxi schema; coordinates must be in the same system as the node file.
struct TripColumns {
  std::string pickup_time = "tpep_pickup_datetime";
  std::string pickup_x = "pickup_longitude";
  std::string pickup_y = "pickup_latitude";
  std::string dropoff_x = "dropoff_longitude";
  std::string dropoff_y = "dropoff_latitude";
};

struct IngestOptions {
  double subsample = 1.0;  // keep probability per valid trip
  std::uint64_t seed = 0;
  TripColumns columns;
  /// Extra margin around the node bounding box, in coordinate units.
  double bbox_margin = 0.0;
};

struct IngestReport {
  std::size_t rows = 0;
  std::size_t invalid = 0;           // unparsable fields
  std::size_t outside_area = 0;      // an endpoint outside the bounding box
  std::size_t same_node = 0;         // origin and destination snap to one node
  std::size_t not_sampled = 0;
  std::vector<TravelerRequest> requests;
};

/// Request time of a trip: either plain seconds or `YYYY-MM-DD HH:MM:SS`,
/// the latter counted from midnight of its own day.
Seconds parse_trip_time(const std::string& text);

/// Nearest node by Euclidean coordinate distance (ties to the lower id).
class NodeLocator {
 public:
  explicit NodeLocator(const Network& network);
  NodeId nearest(double x, double y) const;
  bool inside(double x, double y, double margin) const;

 private:
  const Network& net_;
  double min_x_ = 0.0, min_y_ = 0.0, max_x_ = 0.0, max_y_ = 0.0;
  double cell_ = 1.0;
  int nx_ = 1, ny_ = 1;
  std::vector<std::vector<NodeId>> cells_;
};

/// Snaps trips onto the network, subsamples with a seeded Bernoulli draw per
/// valid trip and orders the result by request time with fresh ids.
IngestReport ingest_taxi_trips(const std::filesystem::path& trips_file, const Network& network,
                               const IngestOptions& options);

}  // namespace fleetsim
