#pragma once

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "peakevd/types.hpp"

// Ingestion and reduction of interval load profiles.
//
// Profile CSV:  customer_id,interval_minutes,r_0,r_1,...,r_{T-1}
// Record CSV:   customer_id,energy,peak
// UTF-8, '.' decimal separator, no quoting (ids must not contain commas).
namespace peakevd::profiles {

// Peak = max reading, energy = sum of readings (interval length treated as 1).
inline CustomerRecord reduce_profile(const LoadProfile& p) {
  if (p.readings.empty())
    throw std::invalid_argument("reduce_profile: profile '" + p.customer_id +
                                "' has no readings");
  CustomerRecord r;
  r.customer_id = p.customer_id;
  r.peak = *std::max_element(p.readings.begin(), p.readings.end());
  double sum = 0.0;
  for (double v : p.readings) sum += v;
  r.energy = sum;
  return r;
}

// Drops profiles that are incomplete (length != expected_T), contain a
// negative reading, or are all zero over the first leading_window points.
// When several rules apply the recorded reason follows the precedence
// incomplete > negative > leading-zero, so each profile has exactly one.
inline std::pair<std::vector<LoadProfile>, FilterReport> filter_profiles(
    const std::vector<LoadProfile>& in, std::size_t expected_T,
    std::size_t leading_window = 672) {
  if (leading_window > expected_T)
    throw std::invalid_argument("filter_profiles: leading_window exceeds expected_T");
  std::vector<LoadProfile> out;
  FilterReport rep;
  for (const auto& p : in) {
    if (p.readings.size() != expected_T) {
      ++rep.dropped_incomplete;
      rep.dropped_ids.emplace_back(p.customer_id, "incomplete");
      continue;
    }
    if (std::any_of(p.readings.begin(), p.readings.end(),
                    [](double v) { return v < 0.0; })) {
      ++rep.dropped_negative;
      rep.dropped_ids.emplace_back(p.customer_id, "negative");
      continue;
    }
    const auto lead_end = p.readings.begin() + static_cast<std::ptrdiff_t>(leading_window);
    if (std::all_of(p.readings.begin(), lead_end, [](double v) { return v == 0.0; })) {
      ++rep.dropped_leading_zero;
      rep.dropped_ids.emplace_back(p.customer_id, "leading_zero");
      continue;
    }
    out.push_back(p);
  }
  rep.kept = out.size();
  return {std::move(out), rep};
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  // Tolerate trailing '\r' from CRLF files.
  if (!out.empty() && !out.back().empty() && out.back().back() == '\r')
    out.back().pop_back();
  return out;
}

inline double parse_double(const std::string& cell, std::size_t row, std::size_t col) {
  const char* b = cell.data();
  const char* e = b + cell.size();
  while (b < e && (*b == ' ' || *b == '\t')) ++b;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(b, e, v);
  while (ptr < e && (*ptr == ' ' || *ptr == '\t')) ++ptr;
  if (ec != std::errc() || ptr != e)
    throw std::invalid_argument("CSV parse error at row " + std::to_string(row) +
                                ", column " + std::to_string(col) +
                                ": non-numeric value '" + cell + "'");
  return v;
}

inline long parse_long(const std::string& cell, std::size_t row, std::size_t col) {
  double v = parse_double(cell, row, col);
  auto l = static_cast<long>(v);
  if (static_cast<double>(l) != v)
    throw std::invalid_argument("CSV parse error at row " + std::to_string(row) +
                                ", column " + std::to_string(col) +
                                ": expected integer, got '" + cell + "'");
  return l;
}

}  // namespace detail

// Rows and columns in error messages are 1-based; row 1 is the header.
inline std::vector<LoadProfile> ingest_csv(std::istream& in) {
  std::vector<LoadProfile> out;
  std::string line;
  std::size_t row = 0;
  bool saw_header = false;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
    auto cells = detail::split_csv_line(line);
    if (!saw_header) {
      if (cells.size() < 2 || cells[0] != "customer_id" || cells[1] != "interval_minutes")
        throw std::invalid_argument(
            "CSV schema error at row 1: expected header "
            "'customer_id,interval_minutes,r_0,...'");
      saw_header = true;
      continue;
    }
    if (cells.size() < 3)
      throw std::invalid_argument("CSV schema error at row " + std::to_string(row) +
                                  ": expected at least one reading column");
    LoadProfile p;
    p.customer_id = cells[0];
    long im = detail::parse_long(cells[1], row, 2);
    if (im <= 0)
      throw std::invalid_argument("CSV schema error at row " + std::to_string(row) +
                                  ": interval_minutes must be positive");
    p.interval_minutes = static_cast<int>(im);
    p.readings.reserve(cells.size() - 2);
    for (std::size_t c = 2; c < cells.size(); ++c)
      p.readings.push_back(detail::parse_double(cells[c], row, c + 1));
    out.push_back(std::move(p));
  }
  if (!saw_header && row > 0)
    throw std::invalid_argument("CSV schema error at row 1: missing header");
  return out;
}

inline std::vector<CustomerRecord> read_records_csv(std::istream& in) {
  std::vector<CustomerRecord> out;
  std::string line;
  std::size_t row = 0;
  bool saw_header = false;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
    auto cells = detail::split_csv_line(line);
    if (!saw_header) {
      if (cells.size() != 3 || cells[0] != "customer_id" || cells[1] != "energy" ||
          cells[2] != "peak")
        throw std::invalid_argument(
            "CSV schema error at row 1: expected header 'customer_id,energy,peak'");
      saw_header = true;
      continue;
    }
    if (cells.size() != 3)
      throw std::invalid_argument("CSV schema error at row " + std::to_string(row) +
                                  ": expected 3 columns, got " +
                                  std::to_string(cells.size()));
    CustomerRecord r;
    r.customer_id = cells[0];
    r.energy = detail::parse_double(cells[1], row, 2);
    r.peak = detail::parse_double(cells[2], row, 3);
    out.push_back(std::move(r));
  }
  if (!saw_header && row > 0)
    throw std::invalid_argument("CSV schema error at row 1: missing header");
  return out;
}

namespace detail {
// Shortest round-trip decimal text for a double; deterministic across runs.
inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}
}  // namespace detail

inline void write_records_csv(std::ostream& out, const std::vector<CustomerRecord>& recs) {
  out << "customer_id,energy,peak\n";
  for (const auto& r : recs)
    out << r.customer_id << ',' << detail::format_double(r.energy) << ','
        << detail::format_double(r.peak) << '\n';
}

inline void write_profiles_csv(std::ostream& out, const std::vector<LoadProfile>& ps) {
  out << "customer_id,interval_minutes";
  std::size_t T = ps.empty() ? 0 : ps.front().readings.size();
  for (std::size_t i = 0; i < T; ++i) out << ",r_" << i;
  out << '\n';
  for (const auto& p : ps) {
    out << p.customer_id << ',' << p.interval_minutes;
    for (double v : p.readings) out << ',' << detail::format_double(v);
    out << '\n';
  }
}

}  // namespace peakevd::profiles
