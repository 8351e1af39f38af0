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

#include "mihash/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace mihash {

namespace {

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) detail::throw_invalid("cannot open for writing: " + path.string());
  out << text;
}

void write_eval_report(const RetrievalReport& report, const std::filesystem::path& path) {
  std::ostringstream out;
  out << "metric,k,value\n";
  out << "queries,," << report.query_count << '\n';
  out << "map,," << fmt("%.17g", report.map) << '\n';
  for (const auto& [k, v] : report.map_at) out << "map@k," << k << ',' << fmt("%.17g", v) << '\n';
  for (const auto& [k, v] : report.precision_at) out << "precision@k," << k << ',' << fmt("%.17g", v) << '\n';
  write_text_file(path, out.str());
}

std::string bar_chart_svg(const std::string& title, const std::string& x_label,
                          const std::vector<std::string>& categories,
                          const std::vector<BarSeries>& series) {
  if (categories.empty() || series.empty()) detail::throw_invalid("bar chart needs categories and series");
  double top = 0.0;
  for (const auto& s : series) {
    if (s.values.size() != categories.size()) detail::throw_invalid("series \"" + s.name + "\" has the wrong length");
    for (double v : s.values) {
      if (!std::isfinite(v) || v < 0.0) detail::throw_invalid("bar values must be finite and non-negative");
      top = std::max(top, v);
    }
  }
  if (top == 0.0) top = 1.0;

  const double width = 720, height = 360;
  const double left = 60, right = 20, upper = 40, lower = 50;
  const double plot_w = width - left - right, plot_h = height - upper - lower;
  const double group_w = plot_w / static_cast<double>(categories.size());
  const double bar_w = 0.8 * group_w / static_cast<double>(series.size());

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
      << escape_xml(title) << "</text>\n";
  // Axes and y ticks.
  svg << "<line x1=\"" << left << "\" y1=\"" << upper + plot_h << "\" x2=\"" << left + plot_w << "\" y2=\""
      << upper + plot_h << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << left << "\" y1=\"" << upper << "\" x2=\"" << left << "\" y2=\"" << upper + plot_h
      << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double v = top * t / 4.0;
    const double y = upper + plot_h - plot_h * t / 4.0;
    svg << "<text x=\"" << left - 6 << "\" y=\"" << fmt("%.1f", y + 4) << "\" text-anchor=\"end\">"
        << fmt("%.3g", v) << "</text>\n";
  }
  const std::size_t label_step = std::max<std::size_t>(1, categories.size() / 16);
  for (std::size_t c = 0; c < categories.size(); ++c) {
    const double x0 = left + group_w * static_cast<double>(c) + 0.1 * group_w;
    for (std::size_t s = 0; s < series.size(); ++s) {
      const double h = plot_h * series[s].values[c] / top;
      svg << "<rect x=\"" << fmt("%.2f", x0 + bar_w * static_cast<double>(s)) << "\" y=\""
          << fmt("%.2f", upper + plot_h - h) << "\" width=\"" << fmt("%.2f", bar_w) << "\" height=\""
          << fmt("%.2f", h) << "\" fill=\"" << escape_xml(series[s].color) << "\" fill-opacity=\"0.8\"/>\n";
    }
    if (c % label_step == 0) {
      svg << "<text x=\"" << fmt("%.2f", x0 + 0.4 * group_w) << "\" y=\"" << upper + plot_h + 14
          << "\" text-anchor=\"middle\">" << escape_xml(categories[c]) << "</text>\n";
    }
  }
  svg << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << height - 12 << "\" text-anchor=\"middle\">"
      << escape_xml(x_label) << "</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    const double y = upper + 8 + 16 * static_cast<double>(s);
    svg << "<rect x=\"" << left + plot_w - 130 << "\" y=\"" << y - 9 << "\" width=\"10\" height=\"10\" fill=\""
        << escape_xml(series[s].color) << "\"/>\n";
    svg << "<text x=\"" << left + plot_w - 115 << "\" y=\"" << y << "\">" << escape_xml(series[s].name)
        << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

std::string distance_plot_svg(const std::vector<double>& p_plus, const std::vector<double>& p_minus,
                              const std::string& title) {
  std::vector<std::string> bins;
  for (std::size_t l = 0; l < p_plus.size(); ++l) bins.push_back(std::to_string(l));
  return bar_chart_svg(title, "Hamming distance", bins,
                       {{"neighbors (p+)", "#1f77b4", p_plus}, {"non-neighbors (p-)", "#d62728", p_minus}});
}

HistogramTable read_histogram_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open: " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("bin,p_plus,p_minus", 0) != 0) {
    throw ParseError(path.string() + ":1: expected header bin,p_plus,p_minus");
  }
  HistogramTable table;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::size_t bin = 0;
    double plus = 0.0, minus = 0.0;
    char tail = 0;
    if (std::sscanf(line.c_str(), "%zu,%lf,%lf%c", &bin, &plus, &minus, &tail) != 3 ||
        bin != table.p_plus.size()) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": malformed histogram row");
    }
    table.p_plus.push_back(plus);
    table.p_minus.push_back(minus);
  }
  if (table.p_plus.empty()) throw ParseError(path.string() + ": no histogram rows");
  return table;
}

}  // namespace mihash
