#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "fleetsim/config.h"
#include "fleetsim/network.h"
#include "fleetsim/plan.h"
#include "fleetsim/routing.h"
#include "fleetsim/scenario_gen.h"

namespace fleetsim::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "fleetsim");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

void write_file(const std::filesystem::path& path, const std::string& text);
std::string read_file(const std::filesystem::path& path);

/// Strongly connected random digraph: a random Hamiltonian cycle plus
/// extra random edges with integral distances and travel times.
Network random_network(std::size_t nodes, std::size_t extra_edges, std::uint64_t seed);

/// Line graph 0 - 1 - ... - (n-1), both directions, given edge distance and
/// travel time.
Network line_network(std::size_t nodes, double distance = 100.0, Seconds travel_time = 10.0);

/// Lexicographic (time, distance) shortest costs from `source` by plain
/// Bellman-Ford relaxation over the quantized edge costs.
std::vector<PathCost> bellman_ford(const Network& net, NodeId source, Seconds t);

/// Sum of quantized edge costs along a node route.
PathCost oracle_route_cost(const Network& net, const Route& route, Seconds t);

/// All-pairs travel times (ms) from Bellman-Ford.
using TimeMatrix = std::vector<std::vector<Millis>>;
TimeMatrix all_pairs_times(const Network& net, Seconds t);

/// One vehicle event: pickup (true) or dropoff (false) of a request. Every
/// event is its own stop of `boarding` ms.
using Event = std::pair<RequestId, bool>;

struct OracleVehicle {
  VehicleId id = 0;
  NodeId node = 0;
  Millis available = 0;
  int capacity = 4;
  std::vector<RequestId> on_board;
};

/// Cost (completion of the last event minus available time) of serving the
/// events in order, or nullopt if any constraint is violated.
std::optional<Millis> oracle_sequence_cost(const TimeMatrix& tt, const OracleVehicle& v, const std::vector<Event>& events,
                                           const RequestTable& requests, Millis boarding);

/// Cheapest feasible cost increase over every pickup/dropoff position pair.
std::optional<Millis> oracle_best_insertion(const TimeMatrix& tt, const OracleVehicle& v,
                                            const std::vector<Event>& plan, RequestId id,
                                            const RequestTable& requests, Millis boarding);

/// Minimum batch objective by enumerating every stop order of every request
/// subset on every vehicle and every disjoint subset assignment.
Millis oracle_batch_objective(const TimeMatrix& tt, const std::vector<OracleVehicle>& vehicles,
                              const std::vector<RequestId>& pool, const std::vector<RequestId>& must_serve,
                              const RequestTable& requests, Millis boarding, Millis penalty);

/// Events of a plan whose stops each board or alight a single request.
std::vector<Event> plan_events(std::span<const PlanStop> stops);
std::vector<PlanStop> event_stops(const std::vector<Event>& events, const RequestTable& requests, Millis boarding);

VehicleSnapshot snapshot_of(const OracleVehicle& v, const RequestTable& requests);

/// Random single vehicle with a feasible existing plan and one new request.
struct InsertionCase {
  Network net;
  RequestTable requests;
  OracleVehicle vehicle;
  std::vector<Event> plan;
  RequestId new_request = 0;
  Millis boarding = 5000;
};
InsertionCase random_insertion_case(std::uint64_t seed);

/// Random small batch: 1-3 vehicles (some with travelers on board) and up
/// to `max_pool` pool requests, some of them must-serve.
struct BatchCase {
  Network net;
  RequestTable requests;
  std::vector<OracleVehicle> vehicles;
  std::vector<RequestId> pool;
  std::vector<RequestId> must_serve;
  Millis boarding = 5000;
};
BatchCase random_batch_case(std::uint64_t seed, int max_pool = 4);

/// Settings of a generated grid scenario.
struct GridScenario {
  GridSpec grid{10, 10, 600.0, 10.0};
  std::size_t requests = 500;
  Seconds duration = 3 * 3600.0;
  std::uint64_t seed = 1;
  int fleet_size = 20;
  Seconds max_wait = 360.0;
  double max_detour = 0.4;
  Seconds boarding = 30.0;
  Seconds time_step = 60.0;
  /// Extra `key,value` rows for the constants file.
  std::map<std::string, std::string> extra;
};

/// Writes network, demand and a constants file into `dir`; returns the
/// constants file path.
std::filesystem::path write_grid_scenario(const std::filesystem::path& dir, const GridScenario& s);

/// Writes `key,value` rows.
void write_constants(const std::filesystem::path& file, const std::map<std::string, std::string>& kv);

/// Parses a single-scenario configuration from a constants file.
ScenarioConfig load_single_config(const std::filesystem::path& constants);

}  // namespace fleetsim::testing
