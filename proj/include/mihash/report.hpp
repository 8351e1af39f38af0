// Copyright 2026 The MIHash Authors.
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

// CSV reports and dependency-free SVG bar charts.

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mihash/retrieval.hpp"

namespace mihash {

// Rows "metric,k,value": queries, map, then one map@k and precision@k row
// per requested cutoff.
void write_eval_report(const RetrievalReport& report, const std::filesystem::path& path);

struct BarSeries {
  std::string name;
  std::string color;  // any SVG color
  std::vector<double> values;
};

// Grouped bars, one group per category. All series must have one value per
// category.
std::string bar_chart_svg(const std::string& title, const std::string& x_label,
                          const std::vector<std::string>& categories,
                          const std::vector<BarSeries>& series);

// Neighbor / non-neighbor Hamming-distance distributions over bins 0..b.
std::string distance_plot_svg(const std::vector<double>& p_plus, const std::vector<double>& p_minus,
                              const std::string& title);

struct HistogramTable {
  std::vector<double> p_plus;
  std::vector<double> p_minus;
};

// Reads the "bin,p_plus,p_minus" CSV written by write_histogram_csv.
HistogramTable read_histogram_csv(const std::filesystem::path& path);

void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace mihash
