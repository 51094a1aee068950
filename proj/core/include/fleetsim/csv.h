#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fleetsim::csv {

/// Minimal reader for the comma separated data files used by the simulator.
/// Fields are not quoted; blank lines and lines starting with '#' are skipped.
class Table {
 public:
  static Table read(const std::filesystem::path& path);
  static Table parse(std::string_view text, std::string source_name = "<memory>");

  const std::string& source() const { return source_; }
  const std::vector<std::string>& header() const { return header_; }
  std::size_t rows() const { return rows_.size(); }

  bool has_column(std::string_view name) const;
  std::size_t column(std::string_view name) const;  // throws ValidationError

  /// Raw field; empty string when the row is short.
  const std::string& at(std::size_t row, std::size_t col) const;
  std::optional<std::string> get(std::size_t row, std::string_view name) const;

  long long get_int(std::size_t row, std::string_view name) const;
  double get_double(std::size_t row, std::string_view name) const;
  long long get_int_or(std::size_t row, std::string_view name, long long fallback) const;
  double get_double_or(std::size_t row, std::string_view name, double fallback) const;

  /// 1-based line number in the source file, for diagnostics.
  std::size_t line_of(std::size_t row) const { return lines_.at(row); }

 private:
  std::string source_;
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
  std::vector<std::size_t> lines_;
};

std::vector<std::string> split(std::string_view line, char sep = ',');
std::string trim(std::string_view s);

long long parse_int(std::string_view s, std::string_view what);
double parse_double(std::string_view s, std::string_view what);
bool parse_bool(std::string_view s, std::string_view what);

/// Fixed 6-decimal rendering used by every output file.
std::string fmt_real(double v);

}  // namespace fleetsim::csv
