#include "fleetsim/repositioning.h"

#include <cmath>
#include <map>

namespace fleetsim {

std::vector<RepositionMove> reposition(const ZoneSystem& zones, const DemandForecast& forecast,
                                       std::span<const IdleVehicle> idle, Seconds t, Seconds horizon,
                                       TravelOracle& oracle) {
  std::map<ZoneId, double> surplus;
  for (auto z : zones.zones()) surplus[z] = -forecast.expected(z, t, horizon);
  std::vector<std::pair<IdleVehicle, ZoneId>> movers;
  for (const auto& v : idle) {
    auto z = zones.zone_of(v.node);
    if (!z) continue;
    surplus[*z] += 1.0;
    movers.emplace_back(v, *z);
  }
  std::vector<char> moved(movers.size(), 0);
  std::vector<RepositionMove> out;
  while (true) {
    std::optional<RepositionMove> best;
    std::size_t best_k = 0;
    for (const auto& [dz, ds] : surplus) {
      if (ds >= 0.0) continue;
      for (std::size_t k = 0; k < movers.size(); ++k) {
        if (moved[k]) continue;
        const auto& [v, sz] = movers[k];
        const double ss = surplus[sz];
        if (ss <= 0.0 || sz == dz) continue;
        const double gain = std::abs(ss) + std::abs(ds) - std::abs(ss - 1.0) - std::abs(ds + 1.0);
        if (!(gain > 1e-12)) continue;
        const auto target = zones.centroid(dz);
        const Millis tt = oracle.time(Position::at_node(v.node), target);
        if (tt >= kInfiniteMillis) continue;
        const bool better = !best || tt < best->travel_time ||
                            (tt == best->travel_time &&
                             (dz < best->to_zone || (dz == best->to_zone && v.id < best->vehicle_id)));
        if (better) {
          best = RepositionMove{v.id, sz, dz, target, tt};
          best_k = k;
        }
      }
    }
    if (!best) break;
    moved[best_k] = 1;
    surplus[best->from_zone] -= 1.0;
    surplus[best->to_zone] += 1.0;
    out.push_back(*best);
  }
  return out;
}

}  // namespace fleetsim
