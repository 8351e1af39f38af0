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

#include "mihash/mi_objective.hpp"

#include <algorithm>
#include <cmath>

namespace mihash {

namespace {

constexpr double kNormTolerance = 1e-9;

void check_distribution(std::span<const double> p, bool allow_zero, const char* what) {
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      detail::throw_invalid(std::string(what) + " has a negative or non-finite entry");
    }
    sum += v;
  }
  if (allow_zero && sum == 0.0) return;
  if (std::abs(sum - 1.0) > kNormTolerance) {
    detail::throw_invalid(std::string(what) + " does not sum to 1");
  }
}

double plogp(double p) { return p > 0.0 ? p * std::log(p) : 0.0; }

std::vector<double> marginal(const DistanceHistogramPair& h) {
  std::vector<double> pd(h.p_plus.size());
  for (std::size_t l = 0; l < pd.size(); ++l) {
    pd[l] = h.prior_plus * h.p_plus[l] + h.prior_minus * h.p_minus[l];
  }
  return pd;
}

bool degenerate(const DistanceHistogramPair& h) { return h.n_plus == 0 || h.n_minus == 0; }

}  // namespace

double entropy(std::span<const double> p) {
  check_distribution(p, /*allow_zero=*/true, "distribution");
  double h = 0.0;
  for (double v : p) h -= plogp(v);
  return h;
}

void validate_histogram_pair(const DistanceHistogramPair& h) {
  if (h.p_plus.empty() || h.p_plus.size() != h.p_minus.size()) {
    detail::throw_invalid("histogram pair has mismatched or empty bins");
  }
  if (h.n_plus < 0 || h.n_minus < 0) detail::throw_invalid("negative population count");
  check_distribution(h.p_plus, h.n_plus == 0, "p_plus");
  check_distribution(h.p_minus, h.n_minus == 0, "p_minus");
  if (h.n_plus + h.n_minus > 0 && std::abs(h.prior_plus + h.prior_minus - 1.0) > kNormTolerance) {
    detail::throw_invalid("priors do not sum to 1");
  }
}

MIValue mutual_information(const DistanceHistogramPair& h) {
  validate_histogram_pair(h);
  MIValue out;
  if (degenerate(h)) return out;
  const std::vector<double> pd = marginal(h);
  // The marginal is a convex combination and may drift off 1 by rounding.
  for (double v : pd) out.h_d -= plogp(v);
  out.h_d_given_c = h.prior_plus * entropy(h.p_plus) + h.prior_minus * entropy(h.p_minus);
  out.h_c = -plogp(h.prior_plus) - plogp(h.prior_minus);
  // Rounding can leave a value a few ulps below zero.
  out.value = std::max(0.0, out.h_d - out.h_d_given_c);
  return out;
}

MIGradient mi_grad_wrt_histograms(const DistanceHistogramPair& h) {
  validate_histogram_pair(h);
  const std::size_t bins = h.p_plus.size();
  MIGradient g{std::vector<double>(bins, 0.0), std::vector<double>(bins, 0.0)};
  if (degenerate(h)) return g;
  const std::vector<double> pd = marginal(h);
  for (std::size_t l = 0; l < bins; ++l) {
    const double log_pd = std::log(std::max(pd[l], kLogFloor));
    if (h.p_plus[l] >= kLogFloor || pd[l] >= kLogFloor) {
      g.plus[l] = h.prior_plus * (std::log(std::max(h.p_plus[l], kLogFloor)) - log_pd);
    }
    if (h.p_minus[l] >= kLogFloor || pd[l] >= kLogFloor) {
      g.minus[l] = h.prior_minus * (std::log(std::max(h.p_minus[l], kLogFloor)) - log_pd);
    }
  }
  return g;
}

double mutual_information_kl(const DistanceHistogramPair& h) {
  validate_histogram_pair(h);
  if (degenerate(h)) return 0.0;
  const std::vector<double> pd = marginal(h);
  double kl_plus = 0.0;
  double kl_minus = 0.0;
  for (std::size_t l = 0; l < pd.size(); ++l) {
    if (h.p_plus[l] > 0.0) kl_plus += h.p_plus[l] * std::log(h.p_plus[l] / pd[l]);
    if (h.p_minus[l] > 0.0) kl_minus += h.p_minus[l] * std::log(h.p_minus[l] / pd[l]);
  }
  return h.prior_plus * kl_plus + h.prior_minus * kl_minus;
}

}  // namespace mihash
