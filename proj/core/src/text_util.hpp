#pragma once

#include <charconv>
#include <string>
#include <string_view>
#include <vector>

#include "fleetsim/errors.hpp"

namespace fleetsim {

/// Shortest round-trip decimal representation; keeps file output
/// deterministic and exact under write/load cycles.
inline std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

inline double parse_double_field(std::string_view field, const std::string& what,
                                 std::size_t line_no) {
  double value = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw ValidationError("line " + std::to_string(line_no) + ": bad " + what + " '" +
                          std::string(field) + "'");
  }
  return value;
}

inline std::int64_t parse_int_field(std::string_view field, const std::string& what,
                                    std::size_t line_no) {
  std::int64_t value = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw ValidationError("line " + std::to_string(line_no) + ": bad " + what + " '" +
                          std::string(field) + "'");
  }
  return value;
}

}  // namespace fleetsim
