#include "fleetsim/zones.h"

#include <cmath>
#include <set>

#include <fmt/format.h>

#include "fleetsim/csv.h"

namespace fleetsim {

ZoneSystem::ZoneSystem(std::map<NodeId, ZoneId> node_zone, std::map<ZoneId, NodeId> centroids)
    : node_zone_(std::move(node_zone)), centroids_(std::move(centroids)) {
  std::set<ZoneId> used;
  for (const auto& [node, zone] : node_zone_) {
    if (!centroids_.count(zone)) throw ValidationError(fmt::format("zone {} of node {} has no centroid", zone, node));
    used.insert(zone);
  }
  for (const auto& [zone, node] : centroids_) {
    if (!used.count(zone)) throw ValidationError(fmt::format("zone {} has no nodes", zone));
    auto it = node_zone_.find(node);
    if (it == node_zone_.end() || it->second != zone)
      throw ValidationError(fmt::format("centroid node {} is not inside zone {}", node, zone));
  }
}

std::optional<ZoneId> ZoneSystem::zone_of(NodeId node) const {
  auto it = node_zone_.find(node);
  if (it == node_zone_.end()) return std::nullopt;
  return it->second;
}

NodeId ZoneSystem::centroid(ZoneId zone) const {
  auto it = centroids_.find(zone);
  if (it == centroids_.end()) throw LookupError(fmt::format("unknown zone {}", zone));
  return it->second;
}

std::vector<ZoneId> ZoneSystem::zones() const {
  std::vector<ZoneId> out;
  for (const auto& [z, n] : centroids_) out.push_back(z);
  return out;
}

ZoneSystem load_zones(const std::filesystem::path& node_zone_file, const std::filesystem::path& centroid_file,
                      const Network& network) {
  std::map<NodeId, ZoneId> node_zone;
  auto nz = csv::Table::read(node_zone_file);
  for (std::size_t r = 0; r < nz.rows(); ++r) {
    const auto node = static_cast<NodeId>(nz.get_int(r, "node_id"));
    if (!network.has_node(node))
      throw ValidationError(fmt::format("{} line {}: node {} is not in the network", node_zone_file.string(),
                                        nz.line_of(r), node));
    if (!node_zone.emplace(node, static_cast<ZoneId>(nz.get_int(r, "zone_id"))).second)
      throw ValidationError(fmt::format("{} line {}: node {} listed twice", node_zone_file.string(), nz.line_of(r), node));
  }
  std::map<ZoneId, NodeId> centroids;
  std::map<ZoneId, std::string> geometry;
  auto cz = csv::Table::read(centroid_file);
  for (std::size_t r = 0; r < cz.rows(); ++r) {
    const auto zone = static_cast<ZoneId>(cz.get_int(r, "zone_id"));
    centroids[zone] = static_cast<NodeId>(cz.get_int(r, "centroid_node"));
    if (auto g = cz.get(r, "geometry")) geometry[zone] = *g;
  }
  ZoneSystem zs(std::move(node_zone), std::move(centroids));
  zs.geometry = std::move(geometry);
  return zs;
}

void DemandForecast::add(ZoneId zone, Seconds bin_start, double expected) {
  if (expected < 0.0) throw ValidationError(fmt::format("negative forecast for zone {}", zone));
  bins_[{zone, bin_start}] += expected;
}

double DemandForecast::expected(ZoneId zone, Seconds t, Seconds horizon) const {
  double sum = 0.0;
  for (auto it = bins_.lower_bound({zone, t}); it != bins_.end() && it->first.first == zone; ++it) {
    if (it->first.second >= t + horizon) break;
    sum += it->second;
  }
  return sum;
}

DemandForecast perfect_forecast(std::span<const ForecastInput> requests, const ZoneSystem& zones, Seconds bin_size) {
  DemandForecast f(bin_size);
  for (const auto& r : requests) {
    auto z = zones.zone_of(r.origin);
    if (!z) continue;
    f.add(*z, std::floor(r.request_time / bin_size) * bin_size, 1.0);
  }
  return f;
}

DemandForecast load_forecast(const std::filesystem::path& file, Seconds bin_size) {
  auto table = csv::Table::read(file);
  DemandForecast f(bin_size);
  for (std::size_t r = 0; r < table.rows(); ++r)
    f.add(static_cast<ZoneId>(table.get_int(r, "zone_id")), table.get_double(r, "bin_start"),
          table.get_double(r, "expected_requests"));
  return f;
}

}  // namespace fleetsim
