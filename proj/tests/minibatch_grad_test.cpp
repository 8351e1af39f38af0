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

#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "test_util.hpp"

namespace mihash {
namespace {

Matrix sign_codes(std::initializer_list<std::initializer_list<double>> columns) {
  const auto m = static_cast<Eigen::Index>(columns.size());
  const auto b = static_cast<Eigen::Index>(columns.begin()->size());
  Matrix codes(b, m);
  Eigen::Index j = 0;
  for (const auto& col : columns) {
    Eigen::Index i = 0;
    for (double v : col) codes(i++, j) = v;
    ++j;
  }
  return codes;
}

TEST(Affinity, SymmetricWithSelfDiagonal) {
  const std::vector<int> labels{0, 1, 0, 2};
  const auto a = AffinityMatrix::from_labels(labels);
  for (int i = 0; i < 4; ++i) {
    EXPECT_EQ(a.at(i, i), Relation::kSelf);
    for (int j = 0; j < 4; ++j) EXPECT_EQ(a.at(i, j), a.at(j, i));
  }
  EXPECT_TRUE(a.neighbors(0, 2));
  EXPECT_FALSE(a.neighbors(0, 1));
  AffinityMatrix m(3);
  EXPECT_THROW(m.set_neighbors(1, 1, true), InvalidInput);
}

TEST(PairwiseDistances, Examples) {
  const Matrix same = sign_codes({{1, -1, 1}, {1, -1, 1}, {1, -1, 1}});
  const Matrix d = pairwise_relaxed_distances(same);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (i != j) EXPECT_EQ(d(i, j), 0.0);

  const Matrix opposite = sign_codes({{1, 1, -1, 1}, {-1, -1, 1, -1}});
  EXPECT_EQ(pairwise_relaxed_distances(opposite)(0, 1), 4.0);

  std::mt19937_64 rng(1);
  const Matrix codes = testing::sample_kink_free_codes(5, 6, 0.0, rng);
  const Matrix all = pairwise_relaxed_distances(codes);
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 6; ++j) {
      if (i == j) continue;
      EXPECT_NEAR(all(i, j), relaxed_hamming(codes.col(i), codes.col(j)), 1e-14);
      EXPECT_EQ(all(i, j), all(j, i));
    }
  }
  EXPECT_THROW(pairwise_relaxed_distances(Matrix::Zero(4, 1)), InvalidInput);
}

TEST(BatchHistograms, TwoNeighborsAtDistanceOne) {
  // b = 4, relaxed distance 1: inner product 2.
  const Matrix codes = sign_codes({{1, 1, 1, 1}, {1, 1, 1, -1}});
  const auto affinity = AffinityMatrix::from_labels(std::vector<int>{0, 0});
  const auto hist = batch_histograms(pairwise_relaxed_distances(codes), affinity, 4);
  ASSERT_EQ(hist.size(), 2u);
  EXPECT_EQ(hist[0].p_plus, (std::vector<double>{0, 1, 0, 0, 0}));
  EXPECT_EQ(hist[0].p_minus, (std::vector<double>{0, 0, 0, 0, 0}));
  EXPECT_EQ(hist[0].n_plus, 1);
  EXPECT_EQ(hist[0].n_minus, 0);
}

TEST(BatchHistograms, SameClassBatchHasNoNonNeighbors) {
  std::mt19937_64 rng(2);
  const Matrix codes = testing::sample_kink_free_codes(4, 5, 0.0, rng);
  const auto affinity = AffinityMatrix::from_labels(std::vector<int>(5, 3));
  for (const auto& h : batch_histograms(pairwise_relaxed_distances(codes), affinity, 4)) {
    for (double v : h.p_minus) EXPECT_EQ(v, 0.0);
    EXPECT_EQ(h.n_plus, 4);
  }
}

TEST(BatchHistograms, IntegerCodesMatchHardHistograms) {
  std::mt19937_64 rng(3);
  std::bernoulli_distribution coin(0.5);
  const int b = 6, m = 7;
  std::vector<BinaryCode> hard;
  Matrix codes(b, m);
  for (int j = 0; j < m; ++j) {
    std::vector<int> s(b);
    for (int i = 0; i < b; ++i) codes(i, j) = s[i] = coin(rng) ? 1 : -1;
    hard.push_back(BinaryCode::from_signs(s));
  }
  const auto labels = testing::random_labels(m, 2, rng);
  const auto affinity = AffinityMatrix::from_labels(labels);
  const auto hist = batch_histograms(pairwise_relaxed_distances(codes), affinity, b);
  for (int i = 0; i < m; ++i) {
    std::vector<int> plus, minus;
    for (int j = 0; j < m; ++j) {
      if (j == i) continue;
      (labels[i] == labels[j] ? plus : minus).push_back(hard_hamming(hard[i], hard[j]));
    }
    const auto expected = make_hard_histogram_pair(plus, minus, b);
    EXPECT_EQ(hist[i].p_plus, expected.p_plus);
    EXPECT_EQ(hist[i].p_minus, expected.p_minus);
  }
}

TEST(MinibatchObjective, Examples) {
  std::mt19937_64 rng(4);
  const Matrix random = testing::sample_kink_free_codes(4, 6, 0.0, rng);
  EXPECT_EQ(minibatch_objective(random, AffinityMatrix::from_labels(std::vector<int>(6, 1))), 0.0);

  // Two classes on two opposite codes; each query sees one neighbor at
  // distance 0 and two non-neighbors at distance 4: I = H(1/3, 2/3).
  const Matrix two = sign_codes({{1, 1, 1, 1}, {1, 1, 1, 1}, {-1, -1, -1, -1}, {-1, -1, -1, -1}});
  const auto affinity = AffinityMatrix::from_labels(std::vector<int>{0, 0, 1, 1});
  EXPECT_NEAR(minibatch_objective(two, affinity), 0.6365141682948128, 1e-12);

  const Matrix identical = sign_codes({{1, -1, 1}, {1, -1, 1}, {1, -1, 1}, {1, -1, 1}});
  EXPECT_NEAR(minibatch_objective(identical, affinity), 0.0, 1e-15);
}

TEST(MinibatchObjective, BoundedByLogTwo) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix codes = testing::sample_kink_free_codes(1 + trial % 8, 2 + trial % 10, 0.0, rng);
    const auto affinity = AffinityMatrix::from_labels(testing::random_labels(codes.cols(), 3, rng));
    const double o = minibatch_objective(codes, affinity);
    EXPECT_GE(o, 0.0);
    EXPECT_LE(o, std::log(2.0) + 1e-12);
  }
}

TEST(NaiveJacobian, SameClassBatchIsZero) {
  std::mt19937_64 rng(6);
  const Matrix codes = testing::sample_kink_free_codes(4, 6, 0.0, rng);
  const auto affinity = AffinityMatrix::from_labels(std::vector<int>(6, 0));
  EXPECT_TRUE(naive_jacobian(codes, affinity).jacobian.isZero(0.0));
  EXPECT_TRUE(efficient_jacobian(codes, affinity).jacobian.isZero(0.0));
}

TEST(NaiveJacobian, MatchesFiniteDifferences) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix codes = testing::sample_kink_free_codes(4, 8, 1e-3, rng);
    const auto affinity = AffinityMatrix::from_labels(testing::random_labels(8, 3, rng));
    const auto grads = naive_jacobian(codes, affinity);
    const Matrix fd = testing::finite_difference(
        [&](const Matrix& c) { return minibatch_objective(c, affinity); }, codes, 1e-6);
    EXPECT_LE(testing::worst_violation(grads.jacobian, fd, 1e-4, 1e-8), 1.0) << "trial " << trial;
    EXPECT_NEAR(grads.objective, grads.per_query_mi.mean(), 1e-12);
  }
}

// b = 1, three items. Item 1 is the query's only neighbor; item 2 is a
// non-neighbor of both. Moving item 1 toward the query raises O_B when the
// neighbor sits closer than the non-neighbor, and lowers it when the two are
// in the reverse order (MI ignores which bin is closer).
TEST(NaiveJacobian, ToySignCheck) {
  AffinityMatrix affinity(3);
  affinity.set_neighbors(0, 1, true);
  const double h = 1e-4;
  auto objective_shift = [&](Matrix codes) {
    Matrix up = codes, down = codes;
    up(0, 1) += h;
    down(0, 1) -= h;
    return minibatch_objective(up, affinity) - minibatch_objective(down, affinity);
  };

  const Matrix near_neighbor = sign_codes({{0.8}, {0.5}, {-0.5}});
  EXPECT_GT(objective_shift(near_neighbor), 0.0);
  EXPECT_GT(naive_jacobian(near_neighbor, affinity).jacobian(0, 1), 0.0);

  const Matrix far_neighbor = sign_codes({{0.8}, {-0.5}, {0.5}});
  EXPECT_LT(objective_shift(far_neighbor), 0.0);
  EXPECT_LT(naive_jacobian(far_neighbor, affinity).jacobian(0, 1), 0.0);
}

TEST(EfficientJacobian, MatchesNaiveAcrossShapes) {
  std::mt19937_64 rng(8);
  for (int m : {2, 4, 8, 16}) {
    for (int b : {2, 4, 8}) {
      for (int rep = 0; rep < 5; ++rep) {
        const Matrix codes = testing::sample_kink_free_codes(b, m, 0.0, rng);
        const auto affinity = AffinityMatrix::from_labels(testing::random_labels(m, 3, rng));
        const auto naive = naive_jacobian(codes, affinity);
        const auto fast = efficient_jacobian(codes, affinity);
        EXPECT_LT((naive.jacobian - fast.jacobian).cwiseAbs().maxCoeff(), 1e-10)
            << "M=" << m << " b=" << b;
        EXPECT_EQ(naive.objective, fast.objective);
      }
    }
  }
}

TEST(EfficientJacobian, BinScratchIsSymmetricWithZeroDiagonal) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const int b = 2 + trial % 6, m = 3 + trial % 9;
    const Matrix codes = testing::sample_kink_free_codes(b, m, 0.0, rng);
    const auto affinity = AffinityMatrix::from_labels(testing::random_labels(m, 2, rng));
    const Matrix d = pairwise_relaxed_distances(codes);
    const auto stats = batch_statistics(d, affinity, b);
    BinScratch scratch;
    for (int l = 0; l <= b; ++l) {
      fill_bin_scratch(d, affinity, stats, l, scratch);
      EXPECT_EQ(scratch.beta_plus, scratch.beta_plus.transpose());
      EXPECT_EQ(scratch.beta_minus, scratch.beta_minus.transpose());
      EXPECT_TRUE(scratch.beta_plus.diagonal().isZero(0.0));
      EXPECT_TRUE(scratch.beta_minus.diagonal().isZero(0.0));
    }
  }
}

// -codes / (2M) * sum_l (A+ B+ + B+ A+ + A- B- + B- A-), built bin by bin
// from the scratch factors.
Matrix per_bin_jacobian(const Matrix& codes, const AffinityMatrix& affinity) {
  const int b = static_cast<int>(codes.rows()), m = static_cast<int>(codes.cols());
  const Matrix d = pairwise_relaxed_distances(codes);
  const auto stats = batch_statistics(d, affinity, b);
  Matrix sum = Matrix::Zero(m, m);
  BinScratch scratch;
  for (int l = 0; l <= b; ++l) {
    fill_bin_scratch(d, affinity, stats, l, scratch);
    sum += scratch.alpha_plus.asDiagonal() * scratch.beta_plus + scratch.beta_plus * scratch.alpha_plus.asDiagonal();
    sum += scratch.alpha_minus.asDiagonal() * scratch.beta_minus +
           scratch.beta_minus * scratch.alpha_minus.asDiagonal();
  }
  return codes * sum * (-1.0 / (2.0 * m));
}

TEST(EfficientJacobian, EqualsPerBinAccumulation) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 30; ++trial) {
    const int b = 1 + trial % 8, m = 2 + trial % 13;
    const Matrix codes = testing::sample_kink_free_codes(b, m, 0.0, rng);
    const auto affinity = AffinityMatrix::from_labels(testing::random_labels(m, 3, rng));
    const Matrix expected = per_bin_jacobian(codes, affinity);
    EXPECT_LT((efficient_jacobian(codes, affinity).jacobian - expected).cwiseAbs().maxCoeff(), 1e-13);
  }
  // Integer distances sit on kinks in every bin they touch.
  const Matrix signs = sign_codes({{1, 1, -1}, {1, -1, -1}, {-1, -1, 1}, {1, 1, 1}});
  const auto affinity = AffinityMatrix::from_labels(std::vector<int>{0, 0, 1, 1});
  EXPECT_EQ(efficient_jacobian(signs, affinity).jacobian, per_bin_jacobian(signs, affinity));
}

TEST(EfficientJacobian, EquivariantUnderPermutation) {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 20; ++trial) {
    const int m = 10;
    const Matrix codes = testing::sample_kink_free_codes(6, m, 0.0, rng);
    const auto labels = testing::random_labels(m, 3, rng);
    const auto affinity = AffinityMatrix::from_labels(labels);
    std::vector<int> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    Matrix permuted(codes.rows(), m);
    for (int k = 0; k < m; ++k) permuted.col(k) = codes.col(order[k]);
    const auto base = efficient_jacobian(codes, affinity);
    const auto moved = efficient_jacobian(permuted, affinity.permuted(order));
    for (int k = 0; k < m; ++k) {
      EXPECT_LT((moved.jacobian.col(k) - base.jacobian.col(order[k])).cwiseAbs().maxCoeff(), 1e-12);
    }
    EXPECT_NEAR(moved.objective, base.objective, 1e-12);
  }
}

}  // namespace
}  // namespace mihash
