#pragma once

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "stodis/errors.hpp"

namespace stodis {

/// Shortest round-trip decimal form of v. All file output goes through this so
/// that re-runs are byte-identical and parse back to the exact same double.
inline std::string fmt_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string fmt_int(long long v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

/// Parses a full string as a double; throws parse_error naming `line` on junk.
inline double parse_double(const std::string& s, std::size_t line) {
  const char* b = s.c_str();
  char* end = nullptr;
  errno = 0;
  double v = std::strtod(b, &end);
  while (end && *end == ' ') ++end;
  if (end == b || (end && *end != '\0'))
    throw parse_error("line " + std::to_string(line) + ": bad number '" + s + "'");
  return v;
}

inline long long parse_int(const std::string& s, std::size_t line) {
  const char* b = s.c_str();
  char* end = nullptr;
  errno = 0;
  long long v = std::strtoll(b, &end, 10);
  while (end && *end == ' ') ++end;
  if (end == b || (end && *end != '\0'))
    throw parse_error("line " + std::to_string(line) + ": bad integer '" + s + "'");
  return v;
}

inline std::vector<std::string> split_csv_row(const std::string& row) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : row) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw io_error("cannot open for writing: " + path);
  return f;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw io_error("cannot open for reading: " + path);
  return f;
}

}  // namespace stodis
