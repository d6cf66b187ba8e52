#pragma once

// Comma-separated tables: header row, full double precision (17 significant
// digits), deterministic byte output.

#include <cstdio>
#include <fstream>
#include <sstream>

#include "qfdtd/common.hpp"

namespace qfdtd {

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  size_t col_index(const std::string& name) const {
    for (size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return i;
    throw ValidationError("csv column not found: " + name);
  }

  std::vector<double> column(const std::string& name) const {
    size_t ci = col_index(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r[ci]);
    return out;
  }
};

inline void write_csv(const CsvTable& t, const std::string& path) {
  std::FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw std::runtime_error("cannot open " + path);
  for (size_t i = 0; i < t.columns.size(); ++i)
    std::fprintf(fp, "%s%s", t.columns[i].c_str(),
                 i + 1 < t.columns.size() ? "," : "\n");
  char buf[64];
  for (const auto& r : t.rows) {
    for (size_t i = 0; i < r.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", r[i]);
      std::fprintf(fp, "%s%s", buf, i + 1 < r.size() ? "," : "\n");
    }
  }
  std::fclose(fp);
}

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("empty csv: " + path);
  std::stringstream hs(line);
  std::string cell;
  while (std::getline(hs, cell, ',')) t.columns.push_back(cell);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ls(line);
    while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
    if (row.size() != t.columns.size())
      throw ValidationError("ragged csv row in " + path);
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace qfdtd
