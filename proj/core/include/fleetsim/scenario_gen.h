#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <vector>

#include "fleetsim/demand.h"
#include "fleetsim/network.h"

namespace fleetsim {

/// Seeded uniform draws shared by the generators. Integer and real draws are
/// derived from raw 64-bit words so results do not depend on the standard
/// library's distribution implementations.
class SeededDraw {
 public:
  explicit SeededDraw(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n);

 private:
  std::mt19937_64 engine_;
};

struct GridSpec {
  int rows = 10;
  int cols = 10;
  double edge_length = 200.0;  // meters
  double speed = 10.0;         // m/s
};

/// Bidirectional rows x cols grid. Node id = row * cols + col.
Network make_grid_network(const GridSpec& spec);

/// `count` requests with uniform request times in [start, end) and uniform
/// distinct origin and destination nodes, sorted by time, ids 0..count-1.
std::vector<TravelerRequest> uniform_demand(const Network& network, std::size_t count, Seconds start, Seconds end,
                                            std::uint64_t seed);

void write_network_csv(const Network& network, const std::filesystem::path& nodes_file,
                       const std::filesystem::path& edges_file);
/// Columns request_id,rq_time,start,end (plus earliest_pickup when any
/// request carries one).
void write_demand_csv(std::span<const TravelerRequest> requests, const std::filesystem::path& file);

struct GridBundle {
  std::filesystem::path nodes_file;
  std::filesystem::path edges_file;
  std::filesystem::path demand_file;
};

/// Writes nodes.csv, edges.csv and demand.csv into `dir`.
GridBundle write_grid_bundle(const std::filesystem::path& dir, const GridSpec& spec, std::size_t requests,
                             Seconds start, Seconds end, std::uint64_t seed);

struct TravelTimeSample {
  Seconds time = 0.0;
  std::size_t pairs = 0;        // ordered pairs with a route
  std::size_t unreachable = 0;  // ordered pairs without one
  double mean_travel_time = 0.0;
};

/// Draws k distinct nodes and averages the fastest travel time over all
/// ordered pairs at each of the given times.
std::vector<TravelTimeSample> sample_travel_times(const Network& network, std::size_t k, std::uint64_t seed,
                                                  std::span<const Seconds> times);

/// The k distinct nodes used by sample_travel_times, in draw order.
std::vector<NodeId> draw_nodes(const Network& network, std::size_t k, std::uint64_t seed);

}  // namespace fleetsim
