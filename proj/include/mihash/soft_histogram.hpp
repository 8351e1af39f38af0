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

// Hamming distances and histograms of Hamming distances.
//
// Bins are centred on the integers 0..b. Soft assignment uses a triangular
// kernel of half-width delta; with delta == 1 every distance in [0, b] splits
// its unit mass between the two nearest bins, and integer distances land in
// exactly one bin.

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "mihash/embedding.hpp"

namespace mihash {

// Conditional distance distributions of one query's neighbors (plus) and
// non-neighbors (minus), with the empirical membership priors.
struct DistanceHistogramPair {
  std::vector<double> p_plus;   // length b+1, all zero when n_plus == 0
  std::vector<double> p_minus;  // length b+1, all zero when n_minus == 0
  double prior_plus = 0.0;
  double prior_minus = 0.0;
  std::int64_t n_plus = 0;
  std::int64_t n_minus = 0;

  int code_length() const { return static_cast<int>(p_plus.size()) - 1; }
};

int hard_hamming(const BinaryCode& a, const BinaryCode& b);

// Popcount distance over raw packed words; both spans must be the same size.
inline int hamming_words(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b) {
  int d = 0;
  for (std::size_t w = 0; w < a.size(); ++w) d += __builtin_popcountll(a[w] ^ b[w]);
  return d;
}

// (b - u.v) / 2 for relaxed codes.
double relaxed_hamming(const Eigen::Ref<const Vector>& u, const Eigen::Ref<const Vector>& v);

double triangular_weight(double d, int bin, double delta = 1.0);

// Subgradient of triangular_weight with respect to d. Zero at the three kinks
// d == bin and d == bin +- delta.
double triangular_subgrad(double d, int bin, double delta = 1.0);

// Normalized soft histogram over bins 0..b. Throws on an empty list or a
// distance outside [0, b].
std::vector<double> soft_histogram(std::span<const double> distances, int code_length,
                                   double delta = 1.0);

std::vector<double> hard_histogram(std::span<const int> distances, int code_length);

// Builds a pair from already-split distance lists. Empty lists give all-zero
// histograms.
DistanceHistogramPair make_histogram_pair(std::span<const double> neighbor_distances,
                                          std::span<const double> non_neighbor_distances,
                                          int code_length);

DistanceHistogramPair make_hard_histogram_pair(std::span<const int> neighbor_distances,
                                               std::span<const int> non_neighbor_distances,
                                               int code_length);

// CSV with header "bin,p_plus,p_minus" and b+1 rows.
void write_histogram_csv(const std::filesystem::path& path, std::span<const double> p_plus,
                         std::span<const double> p_minus);

}  // namespace mihash
