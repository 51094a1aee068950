#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace fleetsim {

using NodeId = std::int32_t;
using EdgeId = std::int32_t;
using RequestId = std::int64_t;
using VehicleId = std::int32_t;
using OperatorId = std::int32_t;
using BookingId = std::int64_t;

/// Simulation time and durations in seconds.
using Seconds = double;

/// Planning arithmetic runs on integer milliseconds so that schedule costs
/// are exact and independent of summation order.
using Millis = std::int64_t;

inline constexpr NodeId kNoNode = -1;
inline constexpr Millis kInfiniteMillis = std::numeric_limits<Millis>::max() / 4;

inline Millis to_millis(Seconds s) { return static_cast<Millis>(std::llround(s * 1000.0)); }
inline Seconds to_seconds(Millis ms) { return static_cast<Seconds>(ms) / 1000.0; }

/// Location on the network: a node, or a point on edge (start_node, end_node)
/// where `fraction` is the share of the edge distance already passed.
struct Position {
  NodeId start_node = kNoNode;
  std::optional<NodeId> end_node;
  double fraction = 0.0;

  static Position at_node(NodeId n) { return Position{n, std::nullopt, 0.0}; }
  static Position on_edge(NodeId from, NodeId to, double f) { return Position{from, to, f}; }

  bool is_node() const { return !end_node.has_value(); }

  bool operator==(const Position& o) const {
    return start_node == o.start_node && end_node == o.end_node && fraction == o.fraction;
  }
};

/// A list of connected nodes.
struct Route {
  std::vector<NodeId> nodes;

  bool empty() const { return nodes.empty(); }
  std::size_t size() const { return nodes.size(); }
  bool operator==(const Route&) const = default;
};

// Error hierarchy. Unreachable routes and operator rejections are values, not
// errors; exceptions are reserved for broken inputs and violated invariants.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input data that references something that does not exist.
class StructuralError : public Error {
 public:
  using Error::Error;
};

/// Input data with an out-of-range or malformed value.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class LookupError : public Error {
 public:
  using Error::Error;
};

/// A runtime state that contradicts an invariant (teleporting vehicle,
/// boarding a traveler who is elsewhere, over-capacity).
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

class BookingConflictError : public Error {
 public:
  using Error::Error;
};

/// A referenced data file does not exist.
class MissingFileError : public Error {
 public:
  explicit MissingFileError(std::string path) : Error("missing data file: " + path), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

/// Configuration problem; carries the file and field that caused it.
class ConfigError : public Error {
 public:
  ConfigError(std::string file, std::string field, const std::string& what)
      : Error(file + ": " + field + ": " + what), file_(std::move(file)), field_(std::move(field)) {}

  const std::string& file() const { return file_; }
  const std::string& field() const { return field_; }

 private:
  std::string file_;
  std::string field_;
};

}  // namespace fleetsim
