#pragma once

// Dataset CSV: header row, then one series per row as
// z1,...,zT,target[,true_scale].

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "alea/data/series.hpp"
#include "alea/errors.hpp"

namespace alea::data {

/// Shortest decimal that round-trips the double.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  if (res.ec != std::errc()) throw DomainError("format_double: conversion failed");
  return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last) throw ConfigError("csv: bad number '" + s + "'");
  return v;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

/// All series must share T; true_scale is written only if every series has it.
inline void write_series_csv(std::ostream& os, const std::vector<RawSeries>& series) {
  if (series.empty()) throw DomainError("write_series_csv: no series");
  const std::size_t T = series.front().length();
  bool with_scale = true;
  for (const auto& s : series) {
    if (s.length() != T) throw ShapeError("write_series_csv: series lengths differ");
    with_scale = with_scale && s.true_scale.has_value();
  }
  for (std::size_t t = 0; t < T; ++t) os << 'z' << (t + 1) << ',';
  os << "target";
  if (with_scale) os << ",true_scale";
  os << '\n';
  for (const auto& s : series) {
    for (double v : s.values) os << format_double(v) << ',';
    os << format_double(s.target);
    if (with_scale) os << ',' << format_double(*s.true_scale);
    os << '\n';
  }
}

inline void write_series_csv(const std::string& path, const std::vector<RawSeries>& series) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot open for writing: " + path);
  write_series_csv(os, series);
  if (!os) throw ConfigError("write failed: " + path);
}

inline std::vector<RawSeries> read_series_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ConfigError("csv: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv_line(line);
  std::size_t T = 0;
  while (T < header.size() && header[T] == "z" + std::to_string(T + 1)) ++T;
  if (T < 2 || T >= header.size() || header[T] != "target") {
    throw ConfigError("csv: header must be z1..zT,target[,true_scale] with T >= 2");
  }
  const bool with_scale = header.size() == T + 2;
  if (with_scale && header[T + 1] != "true_scale") throw ConfigError("csv: unexpected column " + header[T + 1]);
  if (header.size() > T + 2) throw ConfigError("csv: too many columns in header");

  std::vector<RawSeries> out;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw ConfigError("csv: line " + std::to_string(lineno) + " has " + std::to_string(cells.size()) +
                        " cells, expected " + std::to_string(header.size()));
    }
    RawSeries s;
    s.values.reserve(T);
    for (std::size_t t = 0; t < T; ++t) s.values.push_back(parse_double(cells[t]));
    s.target = parse_double(cells[T]);
    if (with_scale) s.true_scale = parse_double(cells[T + 1]);
    s.validate();
    out.push_back(std::move(s));
  }
  return out;
}

inline std::vector<RawSeries> read_series_csv(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open for reading: " + path);
  return read_series_csv(is);
}

}  // namespace alea::data
