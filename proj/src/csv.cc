// Copyright 2026 The FedSim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "fedsim/csv.h"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fedsim {

std::string FormatDouble(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void WriteCsv(const RunLog& log, std::ostream& out) {
  out << kCsvHeader << '\n';
  for (const auto& r : log.rounds) {
    out << r.round << ',' << FormatDouble(r.f_gap) << ','
        << FormatDouble(r.dist_sq) << ',' << FormatDouble(r.grad_norm_sq)
        << ',' << r.sampled.size() << ',' << r.steps_total << '\n';
  }
}

void WriteCsvFile(const RunLog& log, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  WriteCsv(log, out);
  out.flush();
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

namespace {

double ParseDouble(const std::string& s, const std::string& where) {
  // strtod accepts "nan" and "inf" as written by FormatDouble.
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw std::runtime_error(where + ": malformed number '" + s + "'");
  }
  return v;
}

int ParseInt(const std::string& s, const std::string& where) {
  char* end = nullptr;
  const long v = std::strtol(s.c_str(), &end, 10);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw std::runtime_error(where + ": malformed integer '" + s + "'");
  }
  return static_cast<int>(v);
}

}  // namespace

std::vector<CsvRow> ReadCsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw std::runtime_error("'" + path + "' does not have the run-log header");
  }
  std::vector<CsvRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(lineno);
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 6) {
      throw std::runtime_error(where + ": expected 6 columns");
    }
    rows.push_back({ParseInt(cells[0], where), ParseDouble(cells[1], where),
                    ParseDouble(cells[2], where), ParseDouble(cells[3], where),
                    ParseInt(cells[4], where), ParseInt(cells[5], where)});
  }
  return rows;
}

}  // namespace fedsim
