#include "fleetsim/config.h"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>

#include "fleetsim/csv.h"

namespace fleetsim {

std::string_view to_string(SimFlow f) { return f == SimFlow::ids ? "ids" : "bos"; }

SimFlow parse_sim_flow(std::string_view s) {
  if (s == "ids" || s == "IDS") return SimFlow::ids;
  if (s == "bos" || s == "BOS") return SimFlow::bos;
  throw ValidationError(fmt::format("unknown simulation flow '{}'", s));
}

namespace {

const std::vector<std::string> kPathKeys = {
    "network_nodes",  "network_edges",     "tt_factors",          "tt_edge_table", "demand_file",
    "vehicle_types_file", "fleet_file",    "stations_file",       "zone_nodes_file", "zone_centroids_file",
    "forecast_file",  "output_dir",
};

const std::vector<std::string> kOperatorKeys = {
    "op_fleet_size",       "op_max_wait",           "op_max_detour_rel",      "op_boarding_duration",
    "op_batch_period",     "op_reassignment",       "op_repo_period",         "op_repo_horizon",
    "op_soc_threshold",    "op_base_fare",          "op_fare_per_m",          "op_pricing_mode",
    "op_fleet_sizing_mode", "op_reservation_horizon", "op_pricing_alpha",     "op_pricing_u_ref",
    "op_pricing_table",    "op_fleet_sizing_period", "op_fleet_sizing_target", "op_fleet_sizing_band",
    "op_fleet_sizing_schedule", "op_charging_candidates", "op_max_bundle",    "op_max_plans",
    "op_unserved_penalty",
};

const std::vector<std::string> kScalarKeys = {
    "scenario_name", "start_time",    "end_time",      "time_step",     "sim_flow",       "random_seed",
    "routing_backend", "routing_store", "routing_hubs", "user_decision_model", "user_w_full", "user_w_zero",
    "vehicle_type",  "veh_capacity",  "veh_battery_kwh", "veh_range_m", "initial_soc",    "forecast_bin",
    "log_level",     "record_flush_interval", "n_operators",
};

bool is_path_key(const std::string& k) { return std::find(kPathKeys.begin(), kPathKeys.end(), k) != kPathKeys.end(); }

class Reader {
 public:
  Reader(const std::map<std::string, std::string>& values, std::string source)
      : values_(values), source_(std::move(source)) {}

  std::optional<std::string> raw(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end() || csv::trim(it->second).empty()) return std::nullopt;
    return csv::trim(it->second);
  }

  template <typename F>
  auto typed(const std::string& key, const std::string& text, F&& parse) const {
    try {
      return parse(text);
    } catch (const ValidationError& e) {
      throw ConfigError(source_, key, e.what());
    }
  }

  double real(const std::string& key, double fallback) const {
    auto v = raw(key);
    return v ? typed(key, *v, [&](const std::string& s) { return csv::parse_double(s, key); }) : fallback;
  }
  long long integer(const std::string& key, long long fallback) const {
    auto v = raw(key);
    return v ? typed(key, *v, [&](const std::string& s) { return csv::parse_int(s, key); }) : fallback;
  }
  bool boolean(const std::string& key, bool fallback) const {
    auto v = raw(key);
    return v ? typed(key, *v, [&](const std::string& s) { return csv::parse_bool(s, key); }) : fallback;
  }
  std::string text(const std::string& key, const std::string& fallback) const { return raw(key).value_or(fallback); }
  std::optional<std::filesystem::path> path(const std::string& key, const std::filesystem::path& base) const {
    auto v = raw(key);
    if (!v) return std::nullopt;
    std::filesystem::path p(*v);
    if (p.is_relative() && !base.empty()) p = base / p;
    return p;
  }

  /// Per-operator values: one entry broadcasts, otherwise exactly n entries.
  std::vector<std::string> per_operator(const std::string& key, std::size_t n) const {
    auto v = raw(key);
    if (!v) return std::vector<std::string>(n);
    auto parts = csv::split(*v, ';');
    for (auto& p : parts) p = csv::trim(p);
    if (parts.size() == 1) return std::vector<std::string>(n, parts.front());
    if (parts.size() != n)
      throw ConfigError(source_, key, fmt::format("expected 1 or {} ';'-separated values, got {}", n, parts.size()));
    return parts;
  }

  const std::string& source() const { return source_; }

 private:
  const std::map<std::string, std::string>& values_;
  std::string source_;
};

template <typename V>
std::vector<std::pair<Seconds, V>> parse_table(const std::string& text, const std::string& source,
                                               const std::string& key) {
  std::vector<std::pair<Seconds, V>> out;
  if (text.empty()) return out;
  for (const auto& entry : csv::split(text, '|')) {
    const auto kv = csv::split(entry, ':');
    if (kv.size() != 2) throw ConfigError(source, key, fmt::format("expected time:value entries, got '{}'", entry));
    try {
      const double t = csv::parse_double(csv::trim(kv[0]), key);
      if constexpr (std::is_integral_v<V>) {
        out.emplace_back(t, static_cast<V>(csv::parse_int(csv::trim(kv[1]), key)));
      } else {
        out.emplace_back(t, csv::parse_double(csv::trim(kv[1]), key));
      }
    } catch (const ValidationError& e) {
      throw ConfigError(source, key, e.what());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

ScenarioConfig build(const std::map<std::string, std::string>& values, const std::string& source,
                     const std::filesystem::path& base) {
  const auto& known = known_config_keys();
  for (const auto& [k, v] : values)
    if (std::find(known.begin(), known.end(), k) == known.end()) throw ConfigError(source, k, "unknown key");

  Reader r(values, source);
  ScenarioConfig c;
  c.scenario_name = r.text("scenario_name", c.scenario_name);
  c.start_time = r.real("start_time", c.start_time);
  c.end_time = r.real("end_time", c.end_time);
  c.time_step = r.real("time_step", c.time_step);
  if (auto v = r.raw("sim_flow")) c.sim_flow = r.typed("sim_flow", *v, [](const std::string& s) { return parse_sim_flow(s); });
  const long long seed = r.integer("random_seed", 0);
  if (seed < 0) throw ConfigError(source, "random_seed", "must be non-negative");
  c.random_seed = static_cast<std::uint64_t>(seed);

  c.nodes_file = r.path("network_nodes", base).value_or("");
  c.edges_file = r.path("network_edges", base).value_or("");
  c.tt_factors_file = r.path("tt_factors", base);
  c.tt_edge_table_file = r.path("tt_edge_table", base);
  if (auto v = r.raw("routing_backend"))
    c.routing_backend = r.typed("routing_backend", *v, [](const std::string& s) { return parse_backend(s); });
  c.routing_store = r.boolean("routing_store", false);
  if (auto v = r.raw("routing_hubs")) {
    for (const auto& part : csv::split(*v, ';'))
      c.routing_hubs.push_back(static_cast<NodeId>(r.typed("routing_hubs", csv::trim(part), [](const std::string& s) {
        return csv::parse_int(s, "routing_hubs");
      })));
  }

  c.demand_file = r.path("demand_file", base).value_or("");
  const std::string model = r.text("user_decision_model", "basic");
  const DecisionKind kind = r.typed("user_decision_model", model, [](const std::string& s) { return parse_decision_kind(s); });
  if (kind == DecisionKind::time_sensitive_linear_decline) {
    const double wf = r.real("user_w_full", 240.0);
    const double wz = r.real("user_w_zero", 360.0);
    c.default_behavior = r.typed("user_w_full", model, [&](const std::string&) { return DecisionModel::linear_decline(wf, wz); });
  }

  c.vehicle_types_file = r.path("vehicle_types_file", base);
  c.vehicle_type = r.text("vehicle_type", c.vehicle_type);
  c.default_vehicle_type.type_id = c.vehicle_type;
  c.default_vehicle_type.capacity = static_cast<int>(r.integer("veh_capacity", c.default_vehicle_type.capacity));
  c.default_vehicle_type.battery_kwh = r.real("veh_battery_kwh", c.default_vehicle_type.battery_kwh);
  c.default_vehicle_type.range_m = r.real("veh_range_m", c.default_vehicle_type.range_m);
  try {
    c.default_vehicle_type.validate();
  } catch (const ValidationError& e) {
    throw ConfigError(source, "veh_capacity", e.what());
  }
  c.fleet_file = r.path("fleet_file", base);
  c.initial_soc = r.real("initial_soc", 1.0);

  c.stations_file = r.path("stations_file", base);
  c.zone_nodes_file = r.path("zone_nodes_file", base);
  c.zone_centroids_file = r.path("zone_centroids_file", base);
  c.forecast_file = r.path("forecast_file", base);
  c.forecast_bin = r.real("forecast_bin", c.forecast_bin);
  c.output_dir = r.path("output_dir", base).value_or(c.output_dir);
  c.log_level = r.text("log_level", c.log_level);
  c.record_flush_interval = r.real("record_flush_interval", c.record_flush_interval);

  const long long n_ops = r.integer("n_operators", 1);
  if (n_ops < 1) throw ConfigError(source, "n_operators", "at least one operator is required");
  const auto n = static_cast<std::size_t>(n_ops);
  std::map<std::string, std::vector<std::string>> per_op;
  for (const auto& k : kOperatorKeys) per_op[k] = r.per_operator(k, n);

  for (std::size_t i = 0; i < n; ++i) {
    std::map<std::string, std::string> one;
    for (const auto& [k, vals] : per_op)
      if (!vals[i].empty()) one[k] = vals[i];
    Reader o(one, source);
    OperatorConfig op;
    op.id = static_cast<OperatorId>(i);
    op.fleet_size = static_cast<int>(o.integer("op_fleet_size", 0));
    op.max_wait = o.real("op_max_wait", op.max_wait);
    op.max_detour_rel = o.real("op_max_detour_rel", op.max_detour_rel);
    op.boarding_duration = o.real("op_boarding_duration", op.boarding_duration);
    op.batch_period = o.real("op_batch_period", op.batch_period);
    op.reassignment = o.boolean("op_reassignment", true);
    op.repo_period = o.real("op_repo_period", op.repo_period);
    op.repo_horizon = o.real("op_repo_horizon", op.repo_horizon);
    op.soc_threshold = o.real("op_soc_threshold", op.soc_threshold);
    op.charging_candidates = static_cast<int>(o.integer("op_charging_candidates", op.charging_candidates));
    op.base_fare = o.real("op_base_fare", op.base_fare);
    op.fare_per_m = o.real("op_fare_per_m", op.fare_per_m);
    if (auto v = o.raw("op_pricing_mode"))
      op.pricing_mode = o.typed("op_pricing_mode", *v, [](const std::string& s) { return parse_pricing_mode(s); });
    op.pricing_alpha = o.real("op_pricing_alpha", op.pricing_alpha);
    op.pricing_u_ref = o.real("op_pricing_u_ref", op.pricing_u_ref);
    op.pricing_table = parse_table<double>(o.text("op_pricing_table", ""), source, "op_pricing_table");
    if (auto v = o.raw("op_fleet_sizing_mode"))
      op.fleet_sizing_mode =
          o.typed("op_fleet_sizing_mode", *v, [](const std::string& s) { return parse_fleet_sizing_mode(s); });
    op.fleet_sizing_period = o.real("op_fleet_sizing_period", op.fleet_sizing_period);
    op.fleet_sizing_target = o.real("op_fleet_sizing_target", op.fleet_sizing_target);
    op.fleet_sizing_band = o.real("op_fleet_sizing_band", op.fleet_sizing_band);
    op.fleet_sizing_schedule = parse_table<int>(o.text("op_fleet_sizing_schedule", ""), source, "op_fleet_sizing_schedule");
    op.reservation_horizon = o.real("op_reservation_horizon", op.reservation_horizon);
    op.batch.max_bundle = static_cast<int>(o.integer("op_max_bundle", op.batch.max_bundle));
    op.batch.max_plans_per_vehicle = static_cast<int>(o.integer("op_max_plans", op.batch.max_plans_per_vehicle));
    const double penalty_s = o.real("op_unserved_penalty", to_seconds(op.unserved_penalty));
    op.unserved_penalty = to_millis(penalty_s);
    if (c.sim_flow == SimFlow::bos && op.batch_period <= 0.0) op.batch_period = c.time_step;
    c.operators.push_back(std::move(op));
  }
  c.validate(source);
  return c;
}

std::map<std::string, std::string> read_constants(const std::filesystem::path& file) {
  const auto table = csv::Table::read(file);
  if (table.header().size() < 2 || table.header()[0] != "key" || table.header()[1] != "value")
    throw ConfigError(file.string(), "header", "expected 'key,value'");
  std::map<std::string, std::string> out;
  const auto base = file.parent_path();
  for (std::size_t i = 0; i < table.rows(); ++i) {
    const std::string key = csv::trim(table.at(i, 0));
    std::string value = csv::trim(table.at(i, 1));
    if (key.empty()) continue;
    if (out.count(key)) throw ConfigError(file.string(), key, fmt::format("duplicate key on line {}", table.line_of(i)));
    if (is_path_key(key) && !value.empty() && std::filesystem::path(value).is_relative())
      value = (base / value).string();
    out[key] = value;
  }
  return out;
}

}  // namespace

const std::vector<std::string>& known_config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k = kScalarKeys;
    k.insert(k.end(), kPathKeys.begin(), kPathKeys.end());
    k.insert(k.end(), kOperatorKeys.begin(), kOperatorKeys.end());
    std::sort(k.begin(), k.end());
    return k;
  }();
  return keys;
}

void ScenarioConfig::validate(const std::string& source) const {
  if (!(time_step > 0.0)) throw ConfigError(source, "time_step", "must be positive");
  if (!(end_time > start_time)) throw ConfigError(source, "end_time", "must be greater than start_time");
  if (operators.empty()) throw ConfigError(source, "n_operators", "at least one operator is required");
  if (!(initial_soc >= 0.0 && initial_soc <= 1.0)) throw ConfigError(source, "initial_soc", "must lie in [0,1]");
  if (!(record_flush_interval > 0.0)) throw ConfigError(source, "record_flush_interval", "must be positive");
  auto multiple = [&](double period) {
    const double q = period / time_step;
    return std::abs(q - std::round(q)) < 1e-9;
  };
  for (const auto& op : operators) {
    const auto field = [&](const char* name) { return fmt::format("{} (operator {})", name, op.id); };
    if (op.fleet_size < 0) throw ConfigError(source, field("op_fleet_size"), "must be non-negative");
    if (op.max_wait < 0.0) throw ConfigError(source, field("op_max_wait"), "must be non-negative");
    if (op.max_detour_rel < 0.0) throw ConfigError(source, field("op_max_detour_rel"), "must be non-negative");
    if (op.boarding_duration < 0.0) throw ConfigError(source, field("op_boarding_duration"), "must be non-negative");
    if (op.batch_period < 0.0 || !multiple(op.batch_period))
      throw ConfigError(source, field("op_batch_period"), "must be a non-negative multiple of time_step");
    if (op.repo_period < 0.0 || !multiple(op.repo_period))
      throw ConfigError(source, field("op_repo_period"), "must be a non-negative multiple of time_step");
    if (op.fleet_sizing_mode != FleetSizingMode::none && (op.fleet_sizing_period <= 0.0 || !multiple(op.fleet_sizing_period)))
      throw ConfigError(source, field("op_fleet_sizing_period"), "must be a positive multiple of time_step");
    if (op.soc_threshold < 0.0 || op.soc_threshold > 1.0)
      throw ConfigError(source, field("op_soc_threshold"), "must lie in [0,1]");
    if (op.base_fare < 0.0 || op.fare_per_m < 0.0) throw ConfigError(source, field("op_base_fare"), "fares must be non-negative");
    if (op.batch.max_bundle < 1) throw ConfigError(source, field("op_max_bundle"), "must be at least 1");
    if (op.batch.max_plans_per_vehicle < 1) throw ConfigError(source, field("op_max_plans"), "must be at least 1");
    if (op.charging_candidates < 1) throw ConfigError(source, field("op_charging_candidates"), "must be at least 1");
    if (op.unserved_penalty <= 0) throw ConfigError(source, field("op_unserved_penalty"), "must be positive");
    for (const auto& [t, f] : op.pricing_table)
      if (!(f > 0.0)) throw ConfigError(source, field("op_pricing_table"), "fare factors must be positive");
  }
}

std::vector<ScenarioConfig> parse_config(const std::map<std::string, std::string>& constants,
                                         const std::vector<std::map<std::string, std::string>>& scenarios,
                                         const std::string& source, const std::filesystem::path& base_dir) {
  std::vector<ScenarioConfig> out;
  if (scenarios.empty()) {
    out.push_back(build(constants, source, base_dir));
    return out;
  }
  std::set<std::string> names;
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    auto merged = constants;
    for (const auto& [k, v] : scenarios[i])
      if (!csv::trim(v).empty()) merged[k] = v;
    if (!merged.count("scenario_name") || csv::trim(merged["scenario_name"]).empty())
      merged["scenario_name"] = fmt::format("scenario_{}", i);
    auto cfg = build(merged, fmt::format("{} (scenario {})", source, i), base_dir);
    if (!names.insert(cfg.scenario_name).second)
      throw ConfigError(source, "scenario_name", fmt::format("duplicate scenario name '{}'", cfg.scenario_name));
    out.push_back(std::move(cfg));
  }
  return out;
}

std::vector<ScenarioConfig> parse_config(const std::filesystem::path& constant_file,
                                         const std::optional<std::filesystem::path>& scenario_file) {
  const auto constants = read_constants(constant_file);
  std::vector<std::map<std::string, std::string>> rows;
  std::string source = constant_file.string();
  if (scenario_file) {
    const auto table = csv::Table::read(*scenario_file);
    const auto base = scenario_file->parent_path();
    source += " + " + scenario_file->string();
    for (std::size_t i = 0; i < table.rows(); ++i) {
      std::map<std::string, std::string> row;
      for (std::size_t c = 0; c < table.header().size(); ++c) {
        const std::string key = csv::trim(table.header()[c]);
        std::string value = csv::trim(table.at(i, c));
        if (is_path_key(key) && !value.empty() && std::filesystem::path(value).is_relative())
          value = (base / value).string();
        row[key] = value;
      }
      rows.push_back(std::move(row));
    }
  }
  return parse_config(constants, rows, source, {});
}

}  // namespace fleetsim
