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

// Minibatch MI objective and its Jacobian with respect to the relaxed codes.
//
// Every item of a batch of M acts once as a query against the other M-1
// items. Its neighbor and non-neighbor populations are restricted to the
// batch and never include the query itself. The objective is the mean of
// the M per-query mutual information values.
//
// Two Jacobian routes are provided:
//
//   naive_jacobian      accumulates dI_i/dp(l) * dp(l)/dcodes query by
//                       query, pair by pair. Used as a reference.
//   efficient_jacobian  builds, for each bin l, the diagonal A_l of scaled
//                       histogram partials and the symmetric matrix B_l of
//                       kernel slopes, then evaluates
//                         -codes / (2M) * sum_l (A+ B+ + B+ A+ + A- B- + B- A-)
//                       O(b M^2). Each pair contributes to at most two
//                       bins, so the bin sum is taken per entry, and
//                       queries are processed in column tiles so memory
//                       stays O(M) per tile; fill_bin_scratch exposes the
//                       per-bin factors.

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "mihash/mi_objective.hpp"

namespace mihash {

enum class Relation : std::uint8_t { kNonNeighbor = 0, kNeighbor = 1, kSelf = 2 };

// Dense symmetric M x M neighbor relation of a batch. The diagonal is kSelf.
class AffinityMatrix {
 public:
  AffinityMatrix() = default;
  // All pairs non-neighbors.
  explicit AffinityMatrix(int size);

  // predicate(i, j) is consulted for i < j only.
  static AffinityMatrix from_predicate(int size, const std::function<bool(int, int)>& predicate);
  static AffinityMatrix from_labels(std::span<const int> labels);

  int size() const { return size_; }
  Relation at(int i, int j) const { return entries_[static_cast<std::size_t>(i) * size_ + j]; }
  bool neighbors(int i, int j) const { return at(i, j) == Relation::kNeighbor; }
  void set_neighbors(int i, int j, bool is_neighbor);

  // Relation restricted to the listed positions, in that order.
  AffinityMatrix permuted(std::span<const int> order) const;

 private:
  int size_ = 0;
  std::vector<Relation> entries_;
};

struct BatchGradients {
  Matrix jacobian;      // b x M, dO_B / dcodes
  double objective = 0.0;
  Vector per_query_mi;  // length M
};

// Per-bin factors of the efficient route.
struct BinScratch {
  Vector alpha_plus;   // (1/N_i+) dI_i/dp+_{i,l}
  Vector alpha_minus;
  Matrix beta_plus;    // 1[j neighbor of i] * slope(d_ij, l); symmetric, zero diagonal
  Matrix beta_minus;

  explicit BinScratch(int batch_size = 0);
};

// Per-query quantities both routes need.
struct BatchStatistics {
  std::vector<DistanceHistogramPair> histograms;
  std::vector<MIGradient> mi_grads;
  Vector per_query_mi;
};

// codes: b x M relaxed codes. Returns the M x M matrix of (b - c_i.c_j)/2.
Matrix pairwise_relaxed_distances(const Eigen::Ref<const Matrix>& codes);

std::vector<DistanceHistogramPair> batch_histograms(const Eigen::Ref<const Matrix>& distances,
                                                    const AffinityMatrix& affinity,
                                                    int code_length);

BatchStatistics batch_statistics(const Eigen::Ref<const Matrix>& distances,
                                 const AffinityMatrix& affinity, int code_length);

double minibatch_objective(const Eigen::Ref<const Matrix>& codes, const AffinityMatrix& affinity);

BatchGradients naive_jacobian(const Eigen::Ref<const Matrix>& codes,
                              const AffinityMatrix& affinity);

// Fills `scratch` for bin l. The buffers are resized only when the batch size
// changes.
void fill_bin_scratch(const Eigen::Ref<const Matrix>& distances, const AffinityMatrix& affinity,
                      const BatchStatistics& stats, int bin, BinScratch& scratch);

BatchGradients efficient_jacobian(const Eigen::Ref<const Matrix>& codes,
                                  const AffinityMatrix& affinity);

}  // namespace mihash
