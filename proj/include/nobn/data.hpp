#pragma once

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "nobn/core.hpp"

namespace nobn {

namespace detail {

inline std::vector<std::string> split_commas(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.emplace_back(line.substr(start));
      break;
    }
    out.emplace_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

inline void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace detail

/// Parses comma-separated binary data with a header row. Data rows are
/// numbered from 1 in error reports.
inline Dataset parse_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw parse_error("empty input: missing header", 0);
  detail::strip_cr(line);
  if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
  auto names = detail::split_commas(line);
  std::set<std::string> seen;
  for (const auto& name : names) {
    if (name.empty()) throw parse_error("empty variable name in header", 0);
    if (!seen.insert(name).second) throw parse_error("duplicate header name '" + name + "'", 0, name);
  }
  if (names.size() > static_cast<std::size_t>(kMaxVariables))
    throw capacity_error("more than 64 variables in header");

  std::vector<std::string> lines;
  while (std::getline(in, line)) {
    detail::strip_cr(line);
    lines.push_back(line);
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty()) throw parse_error("no instances: data section is empty", 0);

  std::vector<std::uint64_t> rows;
  rows.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const long row = static_cast<long>(i + 1);
    auto fields = detail::split_commas(lines[i]);
    if (fields.size() != names.size())
      throw parse_error("row " + std::to_string(row) + ": expected " + std::to_string(names.size()) + " fields, got " +
                            std::to_string(fields.size()),
                        row);
    std::uint64_t r = 0;
    for (std::size_t c = 0; c < fields.size(); ++c) {
      if (fields[c] == "1") {
        r |= std::uint64_t{1} << c;
      } else if (fields[c] != "0") {
        throw parse_error("row " + std::to_string(row) + ", column " + names[c] + ": expected 0 or 1, got '" +
                              fields[c] + "'",
                          row, names[c]);
      }
    }
    rows.push_back(r);
  }
  return Dataset(std::move(names), std::move(rows));
}

inline Dataset load_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open data file: " + path);
  return parse_csv(in);
}

inline void write_csv(std::ostream& out, const Dataset& data) {
  for (int v = 0; v < data.n(); ++v) out << (v ? "," : "") << data.names()[v];
  out << '\n';
  for (auto row : data.rows()) {
    for (int v = 0; v < data.n(); ++v) out << (v ? "," : "") << ((row >> v) & 1u);
    out << '\n';
  }
}

/// n_jk for (child, parents): one pass over the rows, projecting each row
/// onto the parent mask.
inline CountVector counts(const Dataset& data, int child, ParentSet parents) {
  if (child < 0 || child >= data.n()) throw invalid_argument("child index out of range");
  if (parents.contains(child)) throw invalid_argument("child " + data.names()[child] + " is in its own parent set");
  if (parents.highest() >= data.n()) throw invalid_argument("parent index out of range");
  CountVector cv;
  cv.child = child;
  cv.parents = parents;
  cv.n_jk.assign(parents.configurations(), {0, 0});
  for (auto row : data.rows()) ++cv.n_jk[parents.config_of(row)][(row >> child) & 1u];
  return cv;
}

}  // namespace nobn
