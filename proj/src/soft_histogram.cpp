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

#include "mihash/soft_histogram.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace mihash {

int hard_hamming(const BinaryCode& a, const BinaryCode& b) {
  if (a.length() != b.length()) detail::throw_invalid("code lengths differ");
  return hamming_words(a.words(), b.words());
}

double relaxed_hamming(const Eigen::Ref<const Vector>& u, const Eigen::Ref<const Vector>& v) {
  if (u.size() != v.size()) detail::throw_invalid("relaxed code lengths differ");
  return 0.5 * (static_cast<double>(u.size()) - u.dot(v));
}

double triangular_weight(double d, int bin, double delta) {
  return std::max(0.0, 1.0 - std::abs(d - bin) / delta);
}

double triangular_subgrad(double d, int bin, double delta) {
  const double offset = d - bin;
  if (offset > -delta && offset < 0.0) return 1.0 / delta;
  if (offset > 0.0 && offset < delta) return -1.0 / delta;
  return 0.0;
}

std::vector<double> soft_histogram(std::span<const double> distances, int code_length,
                                   double delta) {
  if (distances.empty()) detail::throw_invalid("soft_histogram of an empty population");
  if (!(delta > 0.0)) detail::throw_invalid("delta must be positive");
  std::vector<double> hist(code_length + 1, 0.0);
  for (double d : distances) {
    if (!(d >= 0.0 && d <= code_length)) {
      detail::throw_invalid("distance " + std::to_string(d) + " outside [0, b]");
    }
    const int lo = std::max(0, static_cast<int>(std::ceil(d - delta)));
    const int hi = std::min(code_length, static_cast<int>(std::floor(d + delta)));
    for (int l = lo; l <= hi; ++l) hist[l] += triangular_weight(d, l, delta);
  }
  const double inv = 1.0 / static_cast<double>(distances.size());
  for (double& h : hist) h *= inv;
  return hist;
}

std::vector<double> hard_histogram(std::span<const int> distances, int code_length) {
  if (distances.empty()) detail::throw_invalid("hard_histogram of an empty population");
  std::vector<double> hist(code_length + 1, 0.0);
  for (int d : distances) {
    if (d < 0 || d > code_length) detail::throw_invalid("distance outside [0, b]");
    hist[d] += 1.0;
  }
  const double inv = 1.0 / static_cast<double>(distances.size());
  for (double& h : hist) h *= inv;
  return hist;
}

namespace {

void set_priors(DistanceHistogramPair& pair) {
  const auto total = pair.n_plus + pair.n_minus;
  if (total > 0) {
    pair.prior_plus = static_cast<double>(pair.n_plus) / static_cast<double>(total);
    pair.prior_minus = static_cast<double>(pair.n_minus) / static_cast<double>(total);
  }
}

}  // namespace

DistanceHistogramPair make_histogram_pair(std::span<const double> neighbor_distances,
                                          std::span<const double> non_neighbor_distances,
                                          int code_length) {
  DistanceHistogramPair pair;
  pair.n_plus = static_cast<std::int64_t>(neighbor_distances.size());
  pair.n_minus = static_cast<std::int64_t>(non_neighbor_distances.size());
  pair.p_plus = neighbor_distances.empty() ? std::vector<double>(code_length + 1, 0.0)
                                           : soft_histogram(neighbor_distances, code_length);
  pair.p_minus = non_neighbor_distances.empty()
                     ? std::vector<double>(code_length + 1, 0.0)
                     : soft_histogram(non_neighbor_distances, code_length);
  set_priors(pair);
  return pair;
}

DistanceHistogramPair make_hard_histogram_pair(std::span<const int> neighbor_distances,
                                               std::span<const int> non_neighbor_distances,
                                               int code_length) {
  DistanceHistogramPair pair;
  pair.n_plus = static_cast<std::int64_t>(neighbor_distances.size());
  pair.n_minus = static_cast<std::int64_t>(non_neighbor_distances.size());
  pair.p_plus = neighbor_distances.empty() ? std::vector<double>(code_length + 1, 0.0)
                                           : hard_histogram(neighbor_distances, code_length);
  pair.p_minus = non_neighbor_distances.empty()
                     ? std::vector<double>(code_length + 1, 0.0)
                     : hard_histogram(non_neighbor_distances, code_length);
  set_priors(pair);
  return pair;
}

void write_histogram_csv(const std::filesystem::path& path, std::span<const double> p_plus,
                         std::span<const double> p_minus) {
  if (p_plus.size() != p_minus.size()) detail::throw_invalid("histogram lengths differ");
  std::ofstream out(path);
  if (!out) detail::throw_invalid("cannot open for writing: " + path.string());
  out << "bin,p_plus,p_minus\n";
  char line[96];
  for (std::size_t l = 0; l < p_plus.size(); ++l) {
    std::snprintf(line, sizeof(line), "%zu,%.17g,%.17g\n", l, p_plus[l], p_minus[l]);
    out << line;
  }
}

}  // namespace mihash
