#include "fleetsim/csv.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "fleetsim/types.h"

namespace fleetsim::csv {

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r' || s[b] == '\n')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r' || s[e - 1] == '\n')) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      break;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
  return out;
}

Table Table::parse(std::string_view text, std::string source_name) {
  Table t;
  t.source_ = std::move(source_name);
  std::size_t line_no = 0;
  std::size_t start = 0;
  bool have_header = false;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(start, end - start);
    ++line_no;
    start = end + 1;
    auto trimmed = trim(line);
    if (trimmed.empty() || trimmed[0] == '#') {
      if (end == text.size()) break;
      continue;
    }
    auto fields = split(trimmed);
    if (!have_header) {
      t.header_ = std::move(fields);
      have_header = true;
    } else {
      t.rows_.push_back(std::move(fields));
      t.lines_.push_back(line_no);
    }
    if (end == text.size()) break;
  }
  return t;
}

Table Table::read(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) throw MissingFileError(path.string());
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError(fmt::format("cannot open data file '{}'", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

bool Table::has_column(std::string_view name) const {
  for (const auto& h : header_)
    if (h == name) return true;
  return false;
}

std::size_t Table::column(std::string_view name) const {
  for (std::size_t i = 0; i < header_.size(); ++i)
    if (header_[i] == name) return i;
  throw ValidationError(fmt::format("{}: missing column '{}'", source_, name));
}

const std::string& Table::at(std::size_t row, std::size_t col) const {
  static const std::string empty;
  const auto& r = rows_.at(row);
  return col < r.size() ? r[col] : empty;
}

std::optional<std::string> Table::get(std::size_t row, std::string_view name) const {
  if (!has_column(name)) return std::nullopt;
  const auto& v = at(row, column(name));
  if (v.empty()) return std::nullopt;
  return v;
}

long long Table::get_int(std::size_t row, std::string_view name) const {
  const auto& v = at(row, column(name));
  return parse_int(v, fmt::format("{} line {} column '{}'", source_, line_of(row), name));
}

double Table::get_double(std::size_t row, std::string_view name) const {
  const auto& v = at(row, column(name));
  return parse_double(v, fmt::format("{} line {} column '{}'", source_, line_of(row), name));
}

long long Table::get_int_or(std::size_t row, std::string_view name, long long fallback) const {
  auto v = get(row, name);
  if (!v) return fallback;
  return parse_int(*v, fmt::format("{} line {} column '{}'", source_, line_of(row), name));
}

double Table::get_double_or(std::size_t row, std::string_view name, double fallback) const {
  auto v = get(row, name);
  if (!v) return fallback;
  return parse_double(*v, fmt::format("{} line {} column '{}'", source_, line_of(row), name));
}

long long parse_int(std::string_view s, std::string_view what) {
  long long v = 0;
  auto str = trim(s);
  auto [p, ec] = std::from_chars(str.data(), str.data() + str.size(), v);
  if (ec != std::errc() || p != str.data() + str.size() || str.empty())
    throw ValidationError(fmt::format("{}: expected integer, got '{}'", what, str));
  return v;
}

double parse_double(std::string_view s, std::string_view what) {
  auto str = trim(s);
  if (str == "inf" || str == "Inf" || str == "INF") return std::numeric_limits<double>::infinity();
  double v = 0;
  auto [p, ec] = std::from_chars(str.data(), str.data() + str.size(), v);
  if (ec != std::errc() || p != str.data() + str.size() || str.empty())
    throw ValidationError(fmt::format("{}: expected number, got '{}'", what, str));
  return v;
}

bool parse_bool(std::string_view s, std::string_view what) {
  auto str = trim(s);
  if (str == "1" || str == "true" || str == "True" || str == "TRUE") return true;
  if (str == "0" || str == "false" || str == "False" || str == "FALSE") return false;
  throw ValidationError(fmt::format("{}: expected boolean, got '{}'", what, str));
}

std::string fmt_real(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  auto s = fmt::format("{:.6f}", v);
  if (s == "-0.000000") s = "0.000000";
  return s;
}

}  // namespace fleetsim::csv
