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

#include "mihash/minibatch_grad.hpp"

#include <algorithm>
#include <cmath>

namespace mihash {

AffinityMatrix::AffinityMatrix(int size) : size_(size) {
  if (size < 0) detail::throw_invalid("negative batch size");
  entries_.assign(static_cast<std::size_t>(size) * size, Relation::kNonNeighbor);
  for (int i = 0; i < size; ++i) entries_[static_cast<std::size_t>(i) * size + i] = Relation::kSelf;
}

AffinityMatrix AffinityMatrix::from_predicate(int size,
                                              const std::function<bool(int, int)>& predicate) {
  AffinityMatrix m(size);
  for (int i = 0; i < size; ++i) {
    for (int j = i + 1; j < size; ++j) m.set_neighbors(i, j, predicate(i, j));
  }
  return m;
}

AffinityMatrix AffinityMatrix::from_labels(std::span<const int> labels) {
  return from_predicate(static_cast<int>(labels.size()),
                        [&](int i, int j) { return labels[i] == labels[j]; });
}

void AffinityMatrix::set_neighbors(int i, int j, bool is_neighbor) {
  if (i == j) detail::throw_invalid("the diagonal of an affinity matrix is fixed");
  if (i < 0 || j < 0 || i >= size_ || j >= size_) detail::throw_invalid("affinity index out of range");
  const Relation r = is_neighbor ? Relation::kNeighbor : Relation::kNonNeighbor;
  entries_[static_cast<std::size_t>(i) * size_ + j] = r;
  entries_[static_cast<std::size_t>(j) * size_ + i] = r;
}

AffinityMatrix AffinityMatrix::permuted(std::span<const int> order) const {
  AffinityMatrix m(static_cast<int>(order.size()));
  for (int i = 0; i < m.size_; ++i) {
    for (int j = i + 1; j < m.size_; ++j) m.set_neighbors(i, j, neighbors(order[i], order[j]));
  }
  return m;
}

BinScratch::BinScratch(int batch_size)
    : alpha_plus(Vector::Zero(batch_size)),
      alpha_minus(Vector::Zero(batch_size)),
      beta_plus(Matrix::Zero(batch_size, batch_size)),
      beta_minus(Matrix::Zero(batch_size, batch_size)) {}

namespace {

void check_codes(const Eigen::Ref<const Matrix>& codes) {
  if (codes.cols() < 2) detail::throw_invalid("a batch needs at least two items");
  if (codes.rows() < 1) detail::throw_invalid("code length must be >= 1");
  detail::check_finite(codes, "relaxed codes");
}

// Relaxed distances from every item to items first..first+count-1, one
// column per target item. Clamped to [0, b] against rounding for +-1 codes.
void relaxed_distance_block(const Eigen::Ref<const Matrix>& codes, Eigen::Index first,
                            Eigen::Index count, Matrix& out) {
  const double b = static_cast<double>(codes.rows());
  out.noalias() = codes.transpose() * codes.middleCols(first, count);
  out = ((b - out.array()) * 0.5).cwiseMax(0.0).cwiseMin(b).matrix();
}

}  // namespace

Matrix pairwise_relaxed_distances(const Eigen::Ref<const Matrix>& codes) {
  check_codes(codes);
  Matrix d;
  relaxed_distance_block(codes, 0, codes.cols(), d);
  // Exactly symmetric, so callers may read whichever triangle is contiguous.
  d.triangularView<Eigen::StrictlyUpper>() = d.transpose();
  return d;
}

namespace {

void check_shapes(const Eigen::Ref<const Matrix>& distances, const AffinityMatrix& affinity) {
  if (distances.rows() != distances.cols() || distances.rows() != affinity.size()) {
    detail::throw_invalid("distance matrix and affinity matrix shapes differ");
  }
}

}  // namespace

std::vector<DistanceHistogramPair> batch_histograms(const Eigen::Ref<const Matrix>& distances,
                                                    const AffinityMatrix& affinity,
                                                    int code_length) {
  check_shapes(distances, affinity);
  const int m = affinity.size();
  std::vector<DistanceHistogramPair> out;
  out.reserve(m);
  std::vector<double> plus;
  std::vector<double> minus;
  for (int i = 0; i < m; ++i) {
    plus.clear();
    minus.clear();
    for (int j = 0; j < m; ++j) {
      if (j == i) continue;
      // Column i of the symmetric distance matrix is contiguous.
      (affinity.neighbors(i, j) ? plus : minus).push_back(distances(j, i));
    }
    out.push_back(make_histogram_pair(plus, minus, code_length));
  }
  return out;
}

BatchStatistics batch_statistics(const Eigen::Ref<const Matrix>& distances,
                                 const AffinityMatrix& affinity, int code_length) {
  BatchStatistics stats;
  stats.histograms = batch_histograms(distances, affinity, code_length);
  stats.per_query_mi.resize(affinity.size());
  stats.mi_grads.reserve(affinity.size());
  for (int i = 0; i < affinity.size(); ++i) {
    stats.per_query_mi[i] = mutual_information(stats.histograms[i]).value;
    stats.mi_grads.push_back(mi_grad_wrt_histograms(stats.histograms[i]));
  }
  return stats;
}

double minibatch_objective(const Eigen::Ref<const Matrix>& codes, const AffinityMatrix& affinity) {
  const Matrix distances = pairwise_relaxed_distances(codes);
  const auto histograms = batch_histograms(distances, affinity, static_cast<int>(codes.rows()));
  double sum = 0.0;
  for (const auto& h : histograms) sum += mutual_information(h).value;
  return sum / static_cast<double>(histograms.size());
}

BatchGradients naive_jacobian(const Eigen::Ref<const Matrix>& codes,
                              const AffinityMatrix& affinity) {
  const Matrix distances = pairwise_relaxed_distances(codes);
  const int b = static_cast<int>(codes.rows());
  const int m = static_cast<int>(codes.cols());
  const BatchStatistics stats = batch_statistics(distances, affinity, b);

  BatchGradients out;
  out.jacobian = Matrix::Zero(b, m);
  out.per_query_mi = stats.per_query_mi;
  out.objective = stats.per_query_mi.mean();

  for (int i = 0; i < m; ++i) {
    const DistanceHistogramPair& h = stats.histograms[i];
    const MIGradient& g = stats.mi_grads[i];
    for (int l = 0; l <= b; ++l) {
      for (int j = 0; j < m; ++j) {
        if (j == i) continue;
        const bool is_neighbor = affinity.neighbors(i, j);
        const auto count = is_neighbor ? h.n_plus : h.n_minus;
        const double dI_dp = is_neighbor ? g.plus[l] : g.minus[l];
        // dp_{i,l}/dd_ij = slope / N_i, and dd_ij/dcode_j = -code_i / 2 (and
        // symmetrically for code_i).
        const double coef =
            -0.5 * dI_dp * triangular_subgrad(distances(i, j), l) / static_cast<double>(count);
        if (coef == 0.0) continue;
        out.jacobian.col(j) += coef * codes.col(i);
        out.jacobian.col(i) += coef * codes.col(j);
      }
    }
  }
  out.jacobian /= static_cast<double>(m);
  return out;
}

void fill_bin_scratch(const Eigen::Ref<const Matrix>& distances, const AffinityMatrix& affinity,
                      const BatchStatistics& stats, int bin, BinScratch& scratch) {
  check_shapes(distances, affinity);
  const int m = affinity.size();
  if (scratch.beta_plus.rows() != m) scratch = BinScratch(m);

  for (int i = 0; i < m; ++i) {
    const DistanceHistogramPair& h = stats.histograms[i];
    const MIGradient& g = stats.mi_grads[i];
    scratch.alpha_plus[i] = h.n_plus > 0 ? g.plus[bin] / static_cast<double>(h.n_plus) : 0.0;
    scratch.alpha_minus[i] = h.n_minus > 0 ? g.minus[bin] / static_cast<double>(h.n_minus) : 0.0;
  }
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < m; ++i) {
      const Relation r = affinity.at(i, j);
      const double slope = r == Relation::kSelf ? 0.0 : triangular_subgrad(distances(i, j), bin);
      scratch.beta_plus(i, j) = r == Relation::kNeighbor ? slope : 0.0;
      scratch.beta_minus(i, j) = r == Relation::kNonNeighbor ? slope : 0.0;
    }
  }
}

BatchGradients efficient_jacobian(const Eigen::Ref<const Matrix>& codes,
                                  const AffinityMatrix& affinity) {
  check_codes(codes);
  const int b = static_cast<int>(codes.rows());
  const int m = static_cast<int>(codes.cols());
  if (affinity.size() != m) detail::throw_invalid("affinity size does not match the batch");

  // With C(i, j) = sum_l alpha_l(i) * slope(d_ij, l) for query i and item j,
  // sum_l (A_l B_l + B_l A_l) = C + C^T. Queries are processed in tiles of
  // columns so no M x M matrix is held: each tile yields its rows of C and
  // adds codes_tile * C_tile and codes * C_tile^T to the Jacobian.
  constexpr int kTile = 64;
  BatchGradients out;
  out.jacobian = Matrix::Zero(b, m);
  out.per_query_mi.resize(m);
  Matrix dist;  // m x w, column q = distances seen by query t0 + q
  Matrix coef;  // m x w, column q = C(t0 + q, :)
  std::vector<double> plus, minus;
  for (int t0 = 0; t0 < m; t0 += kTile) {
    const int w = std::min(kTile, m - t0);
    relaxed_distance_block(codes, t0, w, dist);
    coef.setZero(m, w);
    for (int q = 0; q < w; ++q) {
      const int i = t0 + q;
      plus.clear();
      minus.clear();
      for (int j = 0; j < m; ++j) {
        if (j != i) (affinity.neighbors(i, j) ? plus : minus).push_back(dist(j, q));
      }
      const DistanceHistogramPair h = make_histogram_pair(plus, minus, b);
      out.per_query_mi[i] = mutual_information(h).value;
      const MIGradient g = mi_grad_wrt_histograms(h);
      for (int j = 0; j < m; ++j) {
        if (j == i) continue;
        const bool neighbor = affinity.neighbors(i, j);
        const std::vector<double>& grad = neighbor ? g.plus : g.minus;
        const double d = dist(j, q);
        // A distance has a non-zero kernel slope in at most two bins.
        const int lo = static_cast<int>(std::floor(d));
        double c = 0.0;
        for (int l = lo; l <= lo + 1 && l <= b; ++l) c += triangular_subgrad(d, l) * grad[l];
        coef(j, q) = c / static_cast<double>(neighbor ? h.n_plus : h.n_minus);
      }
    }
    out.jacobian.noalias() += codes.middleCols(t0, w) * coef.transpose();
    out.jacobian.middleCols(t0, w).noalias() += codes * coef;
  }
  out.jacobian *= -1.0 / (2.0 * m);
  out.objective = out.per_query_mi.mean();
  return out;
}

}  // namespace mihash
