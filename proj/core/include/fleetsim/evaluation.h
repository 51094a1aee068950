#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "fleetsim/types.h"

namespace fleetsim {

template <typename T>
struct Bin {
  Seconds start = 0.0;
  T value{};
  bool operator==(const Bin&) const = default;
};

/// Key performance indicators of a finished run, computed from the record
/// files only.
struct KpiReport {
  int total_requests = 0;
  int served = 0;     // finished and dropped off
  int truncated = 0;  // still booked or on board at the end
  int rejected = 0;
  int declined = 0;
  double served_fraction = 0.0;
  double truncated_fraction = 0.0;
  double rejected_fraction = 0.0;
  double declined_fraction = 0.0;

  double fleet_vkm = 0.0;
  double empty_vkm = 0.0;
  /// Completed drop-offs in the operator records.
  int completed_dropoffs = 0;

  double mean_waiting = 0.0;
  double median_waiting = 0.0;
  double p90_waiting = 0.0;
  double max_waiting = 0.0;
  double mean_detour_ratio = 0.0;
  /// Distance weighted occupancy of driving vehicles.
  double mean_occupancy = 0.0;

  std::vector<Bin<int>> unserved_per_15min;
  std::vector<Bin<double>> velocity_per_30min;
  std::vector<Bin<int>> waiting_histogram_60s;
  std::map<std::string, double> compute_totals;

  bool operator==(const KpiReport&) const = default;
};

/// Reads 1_user-stats, 2_op-stats and (if present) 4_compute-times.
KpiReport evaluate(const std::filesystem::path& results_dir);

/// Writes standard_eval.csv (`metric,value`) and eval_bins.csv
/// (`table,bin_start,value`).
void write_standard_eval(const KpiReport& report, const std::filesystem::path& results_dir);

/// Linear interpolation between closest ranks, q in [0,1]. 0 for no data.
double percentile(std::vector<double> values, double q);

}  // namespace fleetsim
