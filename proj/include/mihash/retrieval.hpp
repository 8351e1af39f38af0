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

// Exhaustive Hamming ranking over packed codes, and ranking metrics.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "mihash/embedding.hpp"

namespace mihash {

// Contiguous packed codes of one length. Padding bits are zero.
class BinaryCodeSet {
 public:
  explicit BinaryCodeSet(int code_length);
  static BinaryCodeSet from_codes(std::span<const BinaryCode> codes);

  void push_back(const BinaryCode& code);

  int code_length() const { return code_length_; }
  int words_per_code() const { return words_per_code_; }
  std::size_t size() const { return count_; }
  std::span<const std::uint64_t> words(std::size_t i) const {
    return {words_.data() + i * words_per_code_, static_cast<std::size_t>(words_per_code_)};
  }
  BinaryCode code(std::size_t i) const;

  bool operator==(const BinaryCodeSet&) const = default;

 private:
  int code_length_;
  int words_per_code_;
  std::size_t count_ = 0;
  std::vector<std::uint64_t> words_;
};

// Binary codes of every column of `features` under `model`.
BinaryCodeSet encode(const HashModel& model, const Eigen::Ref<const Matrix>& features);

struct RankedList {
  std::vector<std::uint32_t> ordering;  // database indices, best first
  std::vector<int> distances;           // non-decreasing
};

// Full ranking by Hamming distance; ties keep ascending database index.
RankedList rank_database(const BinaryCode& query, const BinaryCodeSet& db);

// AP over relevance flags in rank order. With a cutoff K only the first K
// ranks count and the normaliser is min(total relevant, K). Zero when no
// item is relevant.
double average_precision(std::span<const std::uint8_t> relevance,
                         std::optional<int> cutoff = std::nullopt);

double precision_at_k(std::span<const std::uint8_t> relevance, int k);

// relevant(query_index, db_index).
using RelevanceFn = std::function<bool(std::size_t, std::size_t)>;

struct EvalOptions {
  std::vector<int> map_cutoffs;        // mAP@K values to report
  std::vector<int> precision_cutoffs;  // precision@K values to report
  // Queries with no relevant item score AP = 0 and are averaged in. When
  // false they are dropped from the mean.
  bool count_empty_queries = true;
  // 0 = take the thread count from MIHASH_THREADS, else all cores.
  int threads = 0;
};

struct RetrievalReport {
  double map = 0.0;
  std::vector<std::pair<int, double>> map_at;
  std::vector<std::pair<int, double>> precision_at;
  std::vector<double> per_query_ap;
  std::size_t query_count = 0;
  std::size_t scored_queries = 0;
};

RetrievalReport evaluate_retrieval(const BinaryCodeSet& queries, const BinaryCodeSet& db,
                                   const RelevanceFn& relevant, const EvalOptions& options = {});

double mean_average_precision(const BinaryCodeSet& queries, const BinaryCodeSet& db,
                              const RelevanceFn& relevant,
                              std::optional<int> cutoff = std::nullopt, int threads = 0);

// Hamming-distance distributions of a code set under a relevance relation.
// Each query contributes its own neighbor / non-neighbor histograms; the
// reported distributions are their means over queries that have both.
struct DistanceDistributions {
  std::vector<double> mean_p_plus;   // length b+1
  std::vector<double> mean_p_minus;  // length b+1
  std::vector<double> per_query_mi;  // nats, 0 for queries lacking either class
  double mean_mi = 0.0;              // over all queries
  std::size_t queries_with_both = 0;

  // Sum over bins of min(p+, p-) for the mean distributions.
  double overlap() const;
};

DistanceDistributions distance_distributions(const BinaryCodeSet& queries, const BinaryCodeSet& db,
                                             const RelevanceFn& relevant, int threads = 0);

// Sign of Gaussian random projections: an untrained baseline.
BinaryCodeSet lsh_codes(const Eigen::Ref<const Matrix>& features, int code_length,
                        std::uint64_t seed);

// MIHASH_THREADS if set and positive, else hardware concurrency (>= 1).
int evaluation_threads();

// "MIC1" file: magic, count (u32), b (u32), then count * ceil(b/64) u64
// words, little-endian.
void save_codes(const BinaryCodeSet& codes, const std::filesystem::path& path);
BinaryCodeSet load_codes(const std::filesystem::path& path);

// One row per code, b comma-separated values in {-1, 1}.
void save_codes_csv(const BinaryCodeSet& codes, const std::filesystem::path& path);

}  // namespace mihash
