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

#ifndef FEDSIM_CSV_H_
#define FEDSIM_CSV_H_

#include <ostream>
#include <string>
#include <vector>

#include "fedsim/algorithms.h"

namespace fedsim {

inline constexpr char kCsvHeader[] =
    "round,f_gap,dist_sq,grad_norm_sq,n_sampled,steps_total";

// 17 significant digits, so parsing the text recovers the double exactly.
std::string FormatDouble(double v);

void WriteCsv(const RunLog& log, std::ostream& out);
// Throws std::runtime_error when the file cannot be written.
void WriteCsvFile(const RunLog& log, const std::string& path);

struct CsvRow {
  int round = 0;
  double f_gap = 0.0;
  double dist_sq = 0.0;
  double grad_norm_sq = 0.0;
  int n_sampled = 0;
  int steps_total = 0;
};

// Throws std::runtime_error on unreadable files or a different schema.
std::vector<CsvRow> ReadCsv(const std::string& path);

}  // namespace fedsim

#endif  // FEDSIM_CSV_H_
