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

// Mutual information between the Hamming distance D to a query and the
// neighbor indicator C, computed from the two conditional histograms:
//
//   p_D(l) = prior_plus * p_plus(l) + prior_minus * p_minus(l)
//   I      = H(p_D) - prior_plus * H(p_plus) - prior_minus * H(p_minus)
//
// All logarithms are natural, so values are in nats.

#pragma once

#include <span>
#include <vector>

#include "mihash/soft_histogram.hpp"

namespace mihash {

// Bin masses below this are floored inside logarithms.
inline constexpr double kLogFloor = 1e-12;

struct MIValue {
  double value = 0.0;
  double h_d = 0.0;
  double h_d_given_c = 0.0;
  double h_c = 0.0;
};

// Partial derivatives of I with respect to the raw histogram coordinates
// p_plus(l), p_minus(l), holding the priors fixed.
struct MIGradient {
  std::vector<double> plus;
  std::vector<double> minus;
};

// -sum p ln p with 0 ln 0 = 0. An all-zero vector has entropy 0. Throws on a
// negative entry or a sum away from 1 by more than 1e-9.
double entropy(std::span<const double> p);

// Throws if the pair violates its invariants.
void validate_histogram_pair(const DistanceHistogramPair& h);

// Zero when either population is empty.
MIValue mutual_information(const DistanceHistogramPair& h);

MIGradient mi_grad_wrt_histograms(const DistanceHistogramPair& h);

// prior_plus * KL(p_plus || p_D) + prior_minus * KL(p_minus || p_D). Equals
// mutual_information(h).value; used as an identity check in tests.
double mutual_information_kl(const DistanceHistogramPair& h);

}  // namespace mihash
