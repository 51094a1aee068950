#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "fleetsim/demand.h"
#include "fleetsim/fleet.h"

namespace fleetsim {

inline constexpr const char* kUserStatsFile = "1_user-stats.csv";
inline constexpr const char* kOpStatsFile = "2_op-stats.csv";
inline constexpr const char* kTimeStatsFile = "3_time-stats.csv";
inline constexpr const char* kComputeTimesFile = "4_compute-times.csv";
inline constexpr const char* kFinalStatesFile = "final_states.csv";
inline constexpr const char* kStandardEvalFile = "standard_eval.csv";

const std::string& user_stats_header();
const std::string& op_stats_header();
const std::string& time_stats_header();
const std::string& compute_times_header();
const std::string& final_states_header();

std::string format_user_row(const UserRecord& r);
/// `capacity` is the vehicle's seat count, kept for occupancy checks.
std::string format_leg_row(const LegRecord& r, int capacity);
std::string format_final_row(const VehicleFinalState& s);

/// Per-step, per-operator state.
struct TimeStatsRow {
  Seconds time = 0.0;
  OperatorId operator_id = 0;
  int revealed = 0;
  int offers = 0;
  int rejections = 0;
  int active_vehicles = 0;
  int busy_vehicles = 0;
  int open_requests = 0;
  double utilization = 0.0;
  double fare_factor = 1.0;
  double network_velocity = 0.0;
};
std::string format_time_row(const TimeStatsRow& r);

/// Wall-clock seconds per phase of one step.
struct ComputeTimesRow {
  Seconds time = 0.0;
  double update = 0.0;
  double requests = 0.0;
  double triggers = 0.0;
  double apply = 0.0;
};
std::string format_compute_row(const ComputeTimesRow& r);

/// Append-only writers of the output streams. Data is flushed whenever the
/// simulated time has advanced by the flush interval, and on close.
class RecordWriter {
 public:
  RecordWriter(const std::filesystem::path& dir, Seconds flush_interval = 900.0);
  ~RecordWriter();
  RecordWriter(const RecordWriter&) = delete;
  RecordWriter& operator=(const RecordWriter&) = delete;

  void user(const UserRecord& r);
  void leg(const LegRecord& r, int capacity);
  void time(const TimeStatsRow& r);
  void compute(const ComputeTimesRow& r);
  void final_states(const std::vector<VehicleFinalState>& states);

  /// Flushes if at least the interval has passed since the last flush.
  void tick(Seconds t);
  void flush();
  void close();

  const std::filesystem::path& directory() const { return dir_; }
  std::size_t flush_count() const { return flushes_; }

 private:
  std::filesystem::path dir_;
  Seconds interval_;
  Seconds last_flush_ = -std::numeric_limits<double>::infinity();
  std::ofstream user_;
  std::ofstream op_;
  std::ofstream time_;
  std::ofstream compute_;
  std::size_t flushes_ = 0;
  bool closed_ = false;
};

}  // namespace fleetsim
