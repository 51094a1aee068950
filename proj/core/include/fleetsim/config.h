#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fleetsim/demand.h"
#include "fleetsim/fleet.h"
#include "fleetsim/fleet_control.h"
#include "fleetsim/routing.h"

namespace fleetsim {

enum class SimFlow { ids, bos };

std::string_view to_string(SimFlow f);
SimFlow parse_sim_flow(std::string_view s);

/// Everything needed to run one scenario. Paths are absolute or relative to
/// the working directory (the parser resolves them against the config file).
struct ScenarioConfig {
  std::string scenario_name = "scenario";
  Seconds start_time = 0.0;
  Seconds end_time = 3600.0;
  Seconds time_step = 60.0;
  SimFlow sim_flow = SimFlow::ids;
  std::uint64_t random_seed = 0;

  std::filesystem::path nodes_file;
  std::filesystem::path edges_file;
  std::optional<std::filesystem::path> tt_factors_file;
  std::optional<std::filesystem::path> tt_edge_table_file;
  BackendKind routing_backend = BackendKind::label_setting;
  bool routing_store = false;
  std::vector<NodeId> routing_hubs;

  std::filesystem::path demand_file;
  DecisionModel default_behavior;

  std::optional<std::filesystem::path> vehicle_types_file;
  std::string vehicle_type = "default";
  /// Used when no vehicle type file is given.
  VehicleType default_vehicle_type{"default", 4, 0.0, 0.0, 50.0, std::numeric_limits<double>::infinity()};
  std::optional<std::filesystem::path> fleet_file;
  double initial_soc = 1.0;

  std::optional<std::filesystem::path> stations_file;
  std::optional<std::filesystem::path> zone_nodes_file;
  std::optional<std::filesystem::path> zone_centroids_file;
  std::optional<std::filesystem::path> forecast_file;
  Seconds forecast_bin = 900.0;

  std::filesystem::path output_dir = "results";
  std::string log_level = "info";
  Seconds record_flush_interval = 900.0;

  std::vector<OperatorConfig> operators;

  /// Throws ConfigError on an inconsistent combination.
  void validate(const std::string& source = "<config>") const;
};

/// Every key accepted in the constants and scenario files.
const std::vector<std::string>& known_config_keys();

/// Builds configurations from a `key,value` constants file and a scenario
/// table whose header names keys and whose rows override the constants.
/// An absent or empty scenario file yields one configuration. Relative
/// paths are resolved against the directory of the file that set them.
std::vector<ScenarioConfig> parse_config(const std::filesystem::path& constant_file,
                                         const std::optional<std::filesystem::path>& scenario_file);

/// Same, from already loaded key/value maps (source names for diagnostics).
std::vector<ScenarioConfig> parse_config(const std::map<std::string, std::string>& constants,
                                         const std::vector<std::map<std::string, std::string>>& scenarios,
                                         const std::string& source = "<config>",
                                         const std::filesystem::path& base_dir = {});

}  // namespace fleetsim
