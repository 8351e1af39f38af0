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

// Test-only oracles and generators. Nothing here calls into the code paths it
// is used to check, apart from the function under test itself.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "mihash/minibatch_grad.hpp"

namespace mihash::testing {

// Central difference of f along every coordinate of x.
inline Matrix finite_difference(const std::function<double(const Matrix&)>& f, const Matrix& x,
                                double step) {
  Matrix grad(x.rows(), x.cols());
  Matrix probe = x;
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      const double saved = probe(r, c);
      probe(r, c) = saved + step;
      const double up = f(probe);
      probe(r, c) = saved - step;
      const double down = f(probe);
      probe(r, c) = saved;
      grad(r, c) = (up - down) / (2.0 * step);
    }
  }
  return grad;
}

// Largest violation of |a - e| <= max(rtol * max(|a|, |e|), atol), expressed
// as the ratio |a - e| / max(rtol * max(|a|, |e|), atol). Values <= 1 pass.
inline double worst_violation(const Matrix& actual, const Matrix& expected, double rtol,
                              double atol) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < actual.size(); ++i) {
    const double a = actual.data()[i];
    const double e = expected.data()[i];
    const double allowed = std::max(rtol * std::max(std::abs(a), std::abs(e)), atol);
    worst = std::max(worst, std::abs(a - e) / allowed);
  }
  return worst;
}

// Distance of x from the nearest integer.
inline double integer_gap(double x) { return std::abs(x - std::round(x)); }

// Relaxed codes in (-0.95, 0.95) whose pairwise relaxed distances all stay at
// least `margin` away from an integer (the kernel kinks when delta = 1).
inline Matrix sample_kink_free_codes(int bits, int items, double margin, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uniform(-0.95, 0.95);
  for (int attempt = 0; attempt < 100000; ++attempt) {
    Matrix codes(bits, items);
    for (Eigen::Index i = 0; i < codes.size(); ++i) codes.data()[i] = uniform(rng);
    bool ok = true;
    for (int i = 0; i < items && ok; ++i) {
      for (int j = i + 1; j < items && ok; ++j) {
        const double d = 0.5 * (bits - codes.col(i).dot(codes.col(j)));
        ok = integer_gap(d) >= margin;
      }
    }
    if (ok) return codes;
  }
  throw std::runtime_error("could not sample kink-free codes");
}

inline std::vector<int> random_labels(int count, int classes, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick(0, classes - 1);
  std::vector<int> labels(count);
  for (int& l : labels) l = pick(rng);
  return labels;
}

// Entropy and MI straight from the definitions, with no normalization
// checks, so perturbed (off-simplex) coordinates can be evaluated.
inline double raw_entropy(const std::vector<double>& p) {
  double h = 0.0;
  for (double v : p) {
    if (v > 0.0) h -= v * std::log(v);
  }
  return h;
}

inline double raw_mutual_information(const std::vector<double>& p_plus,
                                      const std::vector<double>& p_minus, double prior_plus,
                                      double prior_minus) {
  std::vector<double> pd(p_plus.size());
  for (std::size_t l = 0; l < pd.size(); ++l) pd[l] = prior_plus * p_plus[l] + prior_minus * p_minus[l];
  return raw_entropy(pd) - prior_plus * raw_entropy(p_plus) - prior_minus * raw_entropy(p_minus);
}

// MI from the joint table p(d, c) = prior_c * p_c(d):
//   sum_{d,c} p(d,c) ln(p(d,c) / (p(d) p(c))).
inline double joint_table_mutual_information(const std::vector<double>& p_plus,
                                              const std::vector<double>& p_minus,
                                              double prior_plus, double prior_minus) {
  double mi = 0.0;
  for (std::size_t l = 0; l < p_plus.size(); ++l) {
    const double joint_plus = prior_plus * p_plus[l];
    const double joint_minus = prior_minus * p_minus[l];
    const double pd = joint_plus + joint_minus;
    if (joint_plus > 0.0) mi += joint_plus * std::log(joint_plus / (pd * prior_plus));
    if (joint_minus > 0.0) mi += joint_minus * std::log(joint_minus / (pd * prior_minus));
  }
  return mi;
}

// Random normalized histogram with strictly positive bins.
inline std::vector<double> random_distribution(int bins, std::mt19937_64& rng,
                                               double min_mass = 1e-3) {
  std::uniform_real_distribution<double> uniform(min_mass, 1.0);
  std::vector<double> p(bins);
  double sum = 0.0;
  for (double& v : p) sum += (v = uniform(rng));
  for (double& v : p) v /= sum;
  return p;
}

inline DistanceHistogramPair random_pair(int code_length, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> count(1, 50);
  DistanceHistogramPair h;
  h.p_plus = random_distribution(code_length + 1, rng);
  h.p_minus = random_distribution(code_length + 1, rng);
  h.n_plus = count(rng);
  h.n_minus = count(rng);
  const double total = static_cast<double>(h.n_plus + h.n_minus);
  h.prior_plus = h.n_plus / total;
  h.prior_minus = h.n_minus / total;
  return h;
}

// AP straight from the definition: rank by (per-bit Hamming distance, index),
// then average precision at each relevant rank, normalized by the number of
// relevant items (or min(relevant, K) with a cutoff).
inline double brute_force_ap(const std::vector<std::vector<int>>& db_signs,
                             const std::vector<int>& query_signs, const std::vector<bool>& relevant,
                             int cutoff = 0) {
  const std::size_t n = db_signs.size();
  std::vector<std::pair<int, std::size_t>> keyed;
  for (std::size_t i = 0; i < n; ++i) {
    int d = 0;
    for (std::size_t k = 0; k < query_signs.size(); ++k) d += db_signs[i][k] != query_signs[k];
    keyed.emplace_back(d, i);
  }
  std::sort(keyed.begin(), keyed.end());
  const std::size_t limit = cutoff > 0 ? std::min<std::size_t>(n, cutoff) : n;
  double total = 0.0;
  for (bool r : relevant) total += r;
  if (total == 0.0) return 0.0;
  double sum = 0.0;
  for (std::size_t r = 0; r < limit; ++r) {
    if (!relevant[keyed[r].second]) continue;
    double hits = 0.0;
    for (std::size_t s = 0; s <= r; ++s) hits += relevant[keyed[s].second];
    sum += hits / static_cast<double>(r + 1);
  }
  const double denom = cutoff > 0 ? std::min(total, static_cast<double>(cutoff)) : total;
  return sum / denom;
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i] / n;
    my += y[i] / n;
  }
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

// Average ranks, ties sharing the mean rank.
inline std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    for (std::size_t k = i; k <= j; ++k) r[order[k]] = 0.5 * static_cast<double>(i + j);
    i = j + 1;
  }
  return r;
}

inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  return pearson(ranks(x), ranks(y));
}

}  // namespace mihash::testing
