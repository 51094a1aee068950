#include "fleetsim/evaluation.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <fmt/format.h>

#include "fleetsim/csv.h"
#include "fleetsim/records.h"

namespace fleetsim {

double percentile(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (values[hi] - values[lo]) * (pos - static_cast<double>(lo));
}

namespace {

template <typename T>
void add_bin(std::map<Seconds, T>& bins, Seconds start, T v) {
  bins[start] += v;
}

template <typename T>
std::vector<Bin<T>> to_bins(const std::map<Seconds, T>& m) {
  std::vector<Bin<T>> out;
  for (const auto& [s, v] : m) out.push_back({s, v});
  return out;
}

Seconds bin_start(Seconds t, Seconds width) { return std::floor(t / width) * width; }

bool is_drive_kind(const std::string& k) { return k == "drive" || k == "reposition_drive" || k == "to_depot"; }

}  // namespace

KpiReport evaluate(const std::filesystem::path& dir) {
  KpiReport rep;
  const auto users = csv::Table::read(dir / kUserStatsFile);
  std::vector<double> waits;
  std::vector<double> detours;
  std::map<Seconds, int> unserved;
  std::map<Seconds, int> hist;
  for (std::size_t i = 0; i < users.rows(); ++i) {
    ++rep.total_requests;
    const std::string state = users.get(i, "state").value_or("");
    const double rq = users.get_double(i, "request_time");
    if (state == "finished") {
      if (users.get_int(i, "truncated") != 0) {
        ++rep.truncated;
        continue;
      }
      ++rep.served;
      const double ep = users.get_double_or(i, "earliest_pickup", rq);
      const double pickup = users.get_double(i, "pickup_time");
      const double dropoff = users.get_double(i, "dropoff_time");
      const double w = pickup - std::max(rq, ep);
      waits.push_back(w);
      add_bin(hist, bin_start(std::max(0.0, w), 60.0), 1);
      const double direct = users.get_double(i, "direct_travel_time");
      if (direct > 0.0) detours.push_back((dropoff - pickup) / direct);
    } else if (state == "rejected_by_operator") {
      ++rep.rejected;
      add_bin(unserved, bin_start(rq, 900.0), 1);
    } else if (state == "declined_by_user") {
      ++rep.declined;
      add_bin(unserved, bin_start(rq, 900.0), 1);
    } else {
      throw ConsistencyError(fmt::format("{}: request in non-terminal state '{}'", users.source(), state));
    }
  }
  if (rep.total_requests > 0) {
    const double n = rep.total_requests;
    rep.served_fraction = rep.served / n;
    rep.truncated_fraction = rep.truncated / n;
    rep.rejected_fraction = rep.rejected / n;
    rep.declined_fraction = rep.declined / n;
  }
  if (!waits.empty()) {
    rep.mean_waiting = std::accumulate(waits.begin(), waits.end(), 0.0) / static_cast<double>(waits.size());
    rep.median_waiting = percentile(waits, 0.5);
    rep.p90_waiting = percentile(waits, 0.9);
    rep.max_waiting = *std::max_element(waits.begin(), waits.end());
  }
  if (!detours.empty())
    rep.mean_detour_ratio = std::accumulate(detours.begin(), detours.end(), 0.0) / static_cast<double>(detours.size());
  rep.unserved_per_15min = to_bins(unserved);
  rep.waiting_histogram_60s = to_bins(hist);

  const auto legs = csv::Table::read(dir / kOpStatsFile);
  double dist_total = 0.0;
  double occ_dist = 0.0;
  std::map<Seconds, double> bin_dist;
  std::map<Seconds, double> bin_time;
  for (std::size_t i = 0; i < legs.rows(); ++i) {
    const std::string kind = legs.get(i, "kind").value_or("");
    const double d = legs.get_double(i, "distance");
    const int occ = static_cast<int>(legs.get_int(i, "occupancy"));
    if (auto a = legs.get(i, "alighted"); a && !a->empty())
      rep.completed_dropoffs += static_cast<int>(csv::split(*a, ';').size());
    if (!is_drive_kind(kind)) continue;
    dist_total += d;
    occ_dist += d * occ;
    if (occ == 0) rep.empty_vkm += d / 1000.0;
    // Spread the leg evenly over the 30 min bins it spans.
    const double s = legs.get_double(i, "start_time");
    const double e = legs.get_double(i, "end_time");
    if (e <= s) continue;
    for (double b = bin_start(s, 1800.0); b < e; b += 1800.0) {
      const double overlap = std::min(e, b + 1800.0) - std::max(s, b);
      if (overlap <= 0.0) continue;
      bin_time[b] += overlap;
      bin_dist[b] += d * overlap / (e - s);
    }
  }
  rep.fleet_vkm = dist_total / 1000.0;
  rep.mean_occupancy = dist_total > 0.0 ? occ_dist / dist_total : 0.0;
  for (const auto& [b, t] : bin_time) rep.velocity_per_30min.push_back({b, t > 0.0 ? bin_dist[b] / t : 0.0});

  const auto compute_file = dir / kComputeTimesFile;
  if (std::filesystem::exists(compute_file)) {
    const auto ct = csv::Table::read(compute_file);
    for (const char* phase : {"update_s", "requests_s", "triggers_s", "apply_s"}) {
      double sum = 0.0;
      for (std::size_t i = 0; i < ct.rows(); ++i) sum += ct.get_double(i, phase);
      rep.compute_totals[phase] = sum;
    }
  }
  return rep;
}

void write_standard_eval(const KpiReport& r, const std::filesystem::path& dir) {
  std::ofstream out(dir / kStandardEvalFile, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError(fmt::format("cannot write '{}'", (dir / kStandardEvalFile).string()));
  out << "metric,value\n";
  auto put = [&](const char* k, double v) { out << k << ',' << csv::fmt_real(v) << '\n'; };
  put("total_requests", r.total_requests);
  put("served", r.served);
  put("truncated", r.truncated);
  put("rejected_by_operator", r.rejected);
  put("declined_by_user", r.declined);
  put("served_fraction", r.served_fraction);
  put("truncated_fraction", r.truncated_fraction);
  put("rejected_fraction", r.rejected_fraction);
  put("declined_fraction", r.declined_fraction);
  put("fleet_vkm", r.fleet_vkm);
  put("empty_vkm", r.empty_vkm);
  put("completed_dropoffs", r.completed_dropoffs);
  put("mean_waiting_time", r.mean_waiting);
  put("median_waiting_time", r.median_waiting);
  put("p90_waiting_time", r.p90_waiting);
  put("max_waiting_time", r.max_waiting);
  put("mean_detour_ratio", r.mean_detour_ratio);
  put("mean_occupancy", r.mean_occupancy);

  std::ofstream bins(dir / "eval_bins.csv", std::ios::binary | std::ios::trunc);
  bins << "table,bin_start,value\n";
  for (const auto& b : r.unserved_per_15min)
    bins << "unserved_15min," << csv::fmt_real(b.start) << ',' << b.value << '\n';
  for (const auto& b : r.velocity_per_30min)
    bins << "velocity_30min," << csv::fmt_real(b.start) << ',' << csv::fmt_real(b.value) << '\n';
  for (const auto& b : r.waiting_histogram_60s)
    bins << "waiting_60s," << csv::fmt_real(b.start) << ',' << b.value << '\n';
}

}  // namespace fleetsim
