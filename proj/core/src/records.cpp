#include "fleetsim/records.h"

#include <fmt/format.h>

#include "fleetsim/csv.h"

namespace fleetsim {

namespace {

template <typename T>
std::string opt_int(const std::optional<T>& v) {
  return v ? fmt::format("{}", *v) : std::string();
}

std::string opt_real(const std::optional<double>& v) { return v ? csv::fmt_real(*v) : std::string(); }

std::string join_ids(const std::vector<RequestId>& ids) { return fmt::format("{}", fmt::join(ids, ";")); }

std::ofstream open_stream(const std::filesystem::path& path, const std::string& header) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError(fmt::format("cannot write output file '{}'", path.string()));
  out << header << '\n';
  return out;
}

}  // namespace

const std::string& user_stats_header() {
  static const std::string h =
      "request_id,request_time,origin,destination,group_size,earliest_pickup,decision_model,state,truncated,"
      "offer_operator,offered_waiting_time,offered_travel_time,offered_fare,operator_id,vehicle_id,pickup_time,"
      "pickup_node,dropoff_time,dropoff_node,direct_travel_time,direct_distance";
  return h;
}

const std::string& op_stats_header() {
  static const std::string h =
      "operator_id,vehicle_id,kind,start_time,end_time,start_position,end_position,distance,boarded,alighted,"
      "energy_charged_kwh,booking_id,soc_start,soc_end,occupancy,capacity,terminated";
  return h;
}

const std::string& time_stats_header() {
  static const std::string h =
      "time,operator_id,revealed,offers,rejections,active_vehicles,busy_vehicles,open_requests,utilization,"
      "fare_factor,network_velocity";
  return h;
}

const std::string& compute_times_header() {
  static const std::string h = "time,update_s,requests_s,triggers_s,apply_s";
  return h;
}

const std::string& final_states_header() {
  static const std::string h = "operator_id,vehicle_id,type_id,position,soc,on_board,cumulative_distance,active";
  return h;
}

std::string format_user_row(const UserRecord& r) {
  return fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}", r.request_id,
                     csv::fmt_real(r.request_time), r.origin, r.destination, r.group_size, opt_real(r.earliest_pickup),
                     r.decision_model, r.state, r.truncated ? 1 : 0, opt_int(r.offer_operator),
                     opt_real(r.offered_waiting_time), opt_real(r.offered_travel_time), opt_real(r.offered_fare),
                     opt_int(r.operator_id), opt_int(r.vehicle_id), opt_real(r.pickup_time), opt_int(r.pickup_node),
                     opt_real(r.dropoff_time), opt_int(r.dropoff_node), csv::fmt_real(r.direct_travel_time),
                     csv::fmt_real(r.direct_distance));
}

std::string format_leg_row(const LegRecord& r, int capacity) {
  return fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}", r.operator_id, r.vehicle_id,
                     to_string(r.kind), csv::fmt_real(r.start_time), csv::fmt_real(r.end_time),
                     format_position(r.start_position), format_position(r.end_position), csv::fmt_real(r.distance),
                     join_ids(r.boarded), join_ids(r.alighted), csv::fmt_real(r.energy_charged_kwh),
                     opt_int(r.booking), csv::fmt_real(r.soc_start), csv::fmt_real(r.soc_end), r.occupancy, capacity,
                     r.terminated ? 1 : 0);
}

std::string format_final_row(const VehicleFinalState& s) {
  return fmt::format("{},{},{},{},{},{},{},{}", s.operator_id, s.vehicle_id, s.type_id, format_position(s.position),
                     csv::fmt_real(s.soc), join_ids(s.on_board), csv::fmt_real(s.cumulative_distance),
                     s.active ? 1 : 0);
}

std::string format_time_row(const TimeStatsRow& r) {
  return fmt::format("{},{},{},{},{},{},{},{},{},{},{}", csv::fmt_real(r.time), r.operator_id, r.revealed, r.offers,
                     r.rejections, r.active_vehicles, r.busy_vehicles, r.open_requests, csv::fmt_real(r.utilization),
                     csv::fmt_real(r.fare_factor), csv::fmt_real(r.network_velocity));
}

std::string format_compute_row(const ComputeTimesRow& r) {
  return fmt::format("{},{},{},{},{}", csv::fmt_real(r.time), csv::fmt_real(r.update), csv::fmt_real(r.requests),
                     csv::fmt_real(r.triggers), csv::fmt_real(r.apply));
}

RecordWriter::RecordWriter(const std::filesystem::path& dir, Seconds flush_interval)
    : dir_(dir), interval_(flush_interval) {
  std::filesystem::create_directories(dir_);
  user_ = open_stream(dir_ / kUserStatsFile, user_stats_header());
  op_ = open_stream(dir_ / kOpStatsFile, op_stats_header());
  time_ = open_stream(dir_ / kTimeStatsFile, time_stats_header());
  compute_ = open_stream(dir_ / kComputeTimesFile, compute_times_header());
}

RecordWriter::~RecordWriter() {
  try {
    close();
  } catch (...) {
  }
}

void RecordWriter::user(const UserRecord& r) { user_ << format_user_row(r) << '\n'; }
void RecordWriter::leg(const LegRecord& r, int capacity) { op_ << format_leg_row(r, capacity) << '\n'; }
void RecordWriter::time(const TimeStatsRow& r) { time_ << format_time_row(r) << '\n'; }
void RecordWriter::compute(const ComputeTimesRow& r) { compute_ << format_compute_row(r) << '\n'; }

void RecordWriter::final_states(const std::vector<VehicleFinalState>& states) {
  auto out = open_stream(dir_ / kFinalStatesFile, final_states_header());
  for (const auto& s : states) out << format_final_row(s) << '\n';
}

void RecordWriter::tick(Seconds t) {
  if (t - last_flush_ >= interval_) {
    flush();
    last_flush_ = t;
  }
}

void RecordWriter::flush() {
  user_.flush();
  op_.flush();
  time_.flush();
  compute_.flush();
  ++flushes_;
}

void RecordWriter::close() {
  if (closed_) return;
  closed_ = true;
  flush();
  user_.close();
  op_.close();
  time_.close();
  compute_.close();
}

}  // namespace fleetsim
