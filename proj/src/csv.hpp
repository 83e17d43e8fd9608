#pragma once

// Minimal comma-separated reader for the numeric tables this project reads.
// No quoting: every file we consume is plain numbers with a header row.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "tglrn/error.hpp"

namespace tglrn::csv {

struct Table {
  std::filesystem::path path;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> lines;  // 1-based source line per row

  std::size_t line_of(std::size_t row) const { return lines[row]; }

  int column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    throw InputError(path.string() + ": missing column '" + name + "'");
  }
};

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

// Reads header + rows; rejects ragged rows with the offending line number.
inline Table read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  Table t;
  t.path = path;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto cells = split(line);
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size())
      throw InputError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                       std::to_string(t.header.size()) + " columns, found " + std::to_string(cells.size()));
    t.rows.push_back(std::move(cells));
    t.lines.push_back(lineno);
  }
  if (t.header.empty()) throw InputError(path.string() + ": empty file");
  return t;
}

inline int parse_int(const std::string& cell, const std::filesystem::path& path, std::size_t line) {
  int v = 0;
  const auto* end = cell.data() + cell.size();
  auto [p, ec] = std::from_chars(cell.data(), end, v);
  if (ec != std::errc() || p != end || cell.empty())
    throw InputError(path.string() + ":" + std::to_string(line) + ": not an integer: '" + cell + "'");
  return v;
}

inline double parse_double(const std::string& cell, const std::filesystem::path& path, std::size_t line) {
  double v = 0;
  const auto* end = cell.data() + cell.size();
  auto [p, ec] = std::from_chars(cell.data(), end, v);
  if (ec != std::errc() || p != end || cell.empty())
    throw InputError(path.string() + ":" + std::to_string(line) + ": not a number: '" + cell + "'");
  return v;
}

}  // namespace tglrn::csv
