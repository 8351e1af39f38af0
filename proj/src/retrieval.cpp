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

#include "mihash/retrieval.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <thread>

#include "binary_io.hpp"
#include "mihash/mi_objective.hpp"
#include "mihash/soft_histogram.hpp"

namespace mihash {

BinaryCodeSet::BinaryCodeSet(int code_length)
    : code_length_(code_length), words_per_code_(BinaryCode::word_count(code_length)) {
  if (code_length < 1) detail::throw_invalid("code length must be >= 1");
}

BinaryCodeSet BinaryCodeSet::from_codes(std::span<const BinaryCode> codes) {
  if (codes.empty()) detail::throw_invalid("cannot infer code length from an empty list");
  BinaryCodeSet set(codes.front().length());
  set.words_.reserve(codes.size() * set.words_per_code_);
  for (const auto& c : codes) set.push_back(c);
  return set;
}

void BinaryCodeSet::push_back(const BinaryCode& code) {
  if (code.length() != code_length_) detail::throw_invalid("code length mismatch");
  words_.insert(words_.end(), code.words().begin(), code.words().end());
  ++count_;
}

BinaryCode BinaryCodeSet::code(std::size_t i) const {
  if (i >= count_) detail::throw_invalid("code index out of range");
  return BinaryCode::from_words(code_length_, words(i));
}

BinaryCodeSet encode(const HashModel& model, const Eigen::Ref<const Matrix>& features) {
  const Matrix activations = forward_linear_batch(model, features);
  BinaryCodeSet set(model.code_length());
  for (Eigen::Index j = 0; j < activations.cols(); ++j) set.push_back(binarize(activations.col(j)));
  return set;
}

RankedList rank_database(const BinaryCode& query, const BinaryCodeSet& db) {
  if (query.length() != db.code_length()) detail::throw_invalid("query and database code lengths differ");
  const int b = db.code_length();
  const auto q = query.words();
  std::vector<int> dist(db.size());
  std::vector<std::size_t> bucket(static_cast<std::size_t>(b) + 2, 0);
  if (db.words_per_code() == 1) {
    const std::uint64_t qw = q[0];
    for (std::size_t i = 0; i < db.size(); ++i) {
      dist[i] = __builtin_popcountll(qw ^ db.words(i)[0]);
      ++bucket[dist[i] + 1];
    }
  } else {
    for (std::size_t i = 0; i < db.size(); ++i) {
      dist[i] = hamming_words(q, db.words(i));
      ++bucket[dist[i] + 1];
    }
  }
  // Counting sort keeps ascending index order inside each distance.
  for (int d = 1; d <= b + 1; ++d) bucket[d] += bucket[d - 1];
  RankedList out;
  out.ordering.resize(db.size());
  out.distances.resize(db.size());
  for (std::size_t i = 0; i < db.size(); ++i) {
    const std::size_t slot = bucket[dist[i]]++;
    out.ordering[slot] = static_cast<std::uint32_t>(i);
    out.distances[slot] = dist[i];
  }
  return out;
}

double average_precision(std::span<const std::uint8_t> relevance, std::optional<int> cutoff) {
  if (relevance.empty()) detail::throw_invalid("average precision of an empty ranking");
  std::size_t limit = relevance.size();
  if (cutoff) {
    if (*cutoff <= 0) detail::throw_invalid("cutoff K must be positive");
    limit = std::min(limit, static_cast<std::size_t>(*cutoff));
  }
  std::size_t total_relevant = 0;
  for (auto r : relevance) total_relevant += r != 0;
  if (total_relevant == 0) return 0.0;

  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t rank = 0; rank < limit; ++rank) {
    if (relevance[rank]) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(rank + 1);
    }
  }
  const std::size_t denom = cutoff ? std::min(total_relevant, static_cast<std::size_t>(*cutoff))
                                   : total_relevant;
  return sum / static_cast<double>(denom);
}

double precision_at_k(std::span<const std::uint8_t> relevance, int k) {
  if (k < 1 || static_cast<std::size_t>(k) > relevance.size()) {
    detail::throw_invalid("precision@K needs 1 <= K <= database size");
  }
  std::size_t hits = 0;
  for (int i = 0; i < k; ++i) hits += relevance[i] != 0;
  return static_cast<double>(hits) / k;
}

int evaluation_threads() {
  if (const char* env = std::getenv("MIHASH_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

struct QueryScores {
  double ap = 0.0;
  std::vector<double> ap_at;
  std::vector<double> precision_at;
  bool has_relevant = false;
};

QueryScores score_query(std::size_t q, const BinaryCodeSet& queries, const BinaryCodeSet& db,
                        const RelevanceFn& relevant, const EvalOptions& options,
                        std::vector<std::uint8_t>& flags) {
  const RankedList ranked = rank_database(queries.code(q), db);
  flags.resize(db.size());
  for (std::size_t r = 0; r < db.size(); ++r) flags[r] = relevant(q, ranked.ordering[r]) ? 1 : 0;
  QueryScores s;
  s.has_relevant = std::find(flags.begin(), flags.end(), 1) != flags.end();
  s.ap = average_precision(flags);
  for (int k : options.map_cutoffs) s.ap_at.push_back(average_precision(flags, k));
  for (int k : options.precision_cutoffs) s.precision_at.push_back(precision_at_k(flags, k));
  return s;
}

}  // namespace

RetrievalReport evaluate_retrieval(const BinaryCodeSet& queries, const BinaryCodeSet& db,
                                   const RelevanceFn& relevant, const EvalOptions& options) {
  if (queries.size() == 0) detail::throw_invalid("no queries");
  if (db.size() == 0) detail::throw_invalid("empty database");
  if (queries.code_length() != db.code_length()) detail::throw_invalid("code lengths differ");
  for (int k : options.map_cutoffs) {
    if (k <= 0) detail::throw_invalid("mAP cutoff must be positive");
  }
  for (int k : options.precision_cutoffs) {
    if (k < 1 || static_cast<std::size_t>(k) > db.size()) {
      detail::throw_invalid("precision cutoff " + std::to_string(k) + " outside [1, database size]");
    }
  }

  std::vector<QueryScores> scores(queries.size());
  const int threads = std::clamp<int>(options.threads > 0 ? options.threads : evaluation_threads(), 1,
                                      static_cast<int>(queries.size()));
  auto worker = [&](std::size_t begin, std::size_t end) {
    std::vector<std::uint8_t> flags;
    for (std::size_t q = begin; q < end; ++q) {
      scores[q] = score_query(q, queries, db, relevant, options, flags);
    }
  };
  if (threads == 1) {
    worker(0, queries.size());
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (queries.size() + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      const std::size_t begin = t * chunk;
      const std::size_t end = std::min(queries.size(), begin + chunk);
      if (begin < end) pool.emplace_back(worker, begin, end);
    }
  }

  RetrievalReport report;
  report.query_count = queries.size();
  report.map_at.resize(options.map_cutoffs.size());
  report.precision_at.resize(options.precision_cutoffs.size());
  for (std::size_t k = 0; k < options.map_cutoffs.size(); ++k) report.map_at[k].first = options.map_cutoffs[k];
  for (std::size_t k = 0; k < options.precision_cutoffs.size(); ++k) {
    report.precision_at[k].first = options.precision_cutoffs[k];
  }
  for (const auto& s : scores) {
    report.per_query_ap.push_back(s.ap);
    if (!s.has_relevant && !options.count_empty_queries) continue;
    ++report.scored_queries;
    report.map += s.ap;
    for (std::size_t k = 0; k < s.ap_at.size(); ++k) report.map_at[k].second += s.ap_at[k];
    for (std::size_t k = 0; k < s.precision_at.size(); ++k) {
      report.precision_at[k].second += s.precision_at[k];
    }
  }
  if (report.scored_queries > 0) {
    const double inv = 1.0 / static_cast<double>(report.scored_queries);
    report.map *= inv;
    for (auto& [k, v] : report.map_at) v *= inv;
    for (auto& [k, v] : report.precision_at) v *= inv;
  }
  return report;
}

double mean_average_precision(const BinaryCodeSet& queries, const BinaryCodeSet& db,
                              const RelevanceFn& relevant, std::optional<int> cutoff,
                              int threads) {
  EvalOptions options;
  options.threads = threads;
  if (cutoff) options.map_cutoffs.push_back(*cutoff);
  const RetrievalReport report = evaluate_retrieval(queries, db, relevant, options);
  return cutoff ? report.map_at.front().second : report.map;
}

double DistanceDistributions::overlap() const {
  double sum = 0.0;
  for (std::size_t l = 0; l < mean_p_plus.size(); ++l) sum += std::min(mean_p_plus[l], mean_p_minus[l]);
  return sum;
}

DistanceDistributions distance_distributions(const BinaryCodeSet& queries, const BinaryCodeSet& db,
                                             const RelevanceFn& relevant, int threads) {
  if (queries.size() == 0) detail::throw_invalid("no queries");
  if (db.size() == 0) detail::throw_invalid("empty database");
  if (queries.code_length() != db.code_length()) detail::throw_invalid("code lengths differ");
  const int b = db.code_length();
  std::vector<DistanceHistogramPair> pairs(queries.size());
  auto worker = [&](std::size_t begin, std::size_t end) {
    std::vector<int> near, far;
    for (std::size_t q = begin; q < end; ++q) {
      near.clear();
      far.clear();
      for (std::size_t i = 0; i < db.size(); ++i) {
        const int d = hamming_words(queries.words(q), db.words(i));
        (relevant(q, i) ? near : far).push_back(d);
      }
      pairs[q] = make_hard_histogram_pair(near, far, b);
    }
  };
  const int n_threads = std::clamp<int>(threads > 0 ? threads : evaluation_threads(), 1,
                                        static_cast<int>(queries.size()));
  if (n_threads == 1) {
    worker(0, queries.size());
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (queries.size() + n_threads - 1) / n_threads;
    for (int t = 0; t < n_threads; ++t) {
      const std::size_t begin = t * chunk;
      const std::size_t end = std::min(queries.size(), begin + chunk);
      if (begin < end) pool.emplace_back(worker, begin, end);
    }
  }

  DistanceDistributions out;
  out.mean_p_plus.assign(b + 1, 0.0);
  out.mean_p_minus.assign(b + 1, 0.0);
  for (const auto& h : pairs) {
    const double mi = mutual_information(h).value;
    out.per_query_mi.push_back(mi);
    out.mean_mi += mi;
    if (h.n_plus == 0 || h.n_minus == 0) continue;
    ++out.queries_with_both;
    for (int l = 0; l <= b; ++l) {
      out.mean_p_plus[l] += h.p_plus[l];
      out.mean_p_minus[l] += h.p_minus[l];
    }
  }
  out.mean_mi /= static_cast<double>(pairs.size());
  if (out.queries_with_both > 0) {
    const double inv = 1.0 / static_cast<double>(out.queries_with_both);
    for (int l = 0; l <= b; ++l) {
      out.mean_p_plus[l] *= inv;
      out.mean_p_minus[l] *= inv;
    }
  }
  return out;
}

BinaryCodeSet lsh_codes(const Eigen::Ref<const Matrix>& features, int code_length,
                        std::uint64_t seed) {
  const HashModel projection =
      HashModel::gaussian(static_cast<int>(features.rows()), code_length, 1.0, seed);
  return encode(projection, features);
}

void save_codes(const BinaryCodeSet& codes, const std::filesystem::path& path) {
  io::LittleEndianWriter out(path);
  out.magic("MIC1");
  out.put(static_cast<std::uint32_t>(codes.size()));
  out.put(static_cast<std::uint32_t>(codes.code_length()));
  for (std::size_t i = 0; i < codes.size(); ++i) {
    for (std::uint64_t w : codes.words(i)) out.put(w);
  }
  out.finish();
}

BinaryCodeSet load_codes(const std::filesystem::path& path) {
  io::LittleEndianReader in(path);
  in.expect_magic("MIC1");
  const auto count = in.get<std::uint32_t>();
  const auto b = in.get<std::uint32_t>();
  if (b == 0) throw ParseError(path.string() + ": zero code length at byte offset 8");
  BinaryCodeSet set(static_cast<int>(b));
  std::vector<std::uint64_t> words(set.words_per_code());
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::size_t offset = in.offset();
    for (auto& w : words) w = in.get<std::uint64_t>();
    try {
      set.push_back(BinaryCode::from_words(static_cast<int>(b), words));
    } catch (const InvalidInput& e) {
      throw ParseError(path.string() + ": code at byte offset " + std::to_string(offset) + ": " +
                       e.what());
    }
  }
  in.expect_end();
  return set;
}

void save_codes_csv(const BinaryCodeSet& codes, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) detail::throw_invalid("cannot open for writing: " + path.string());
  for (std::size_t i = 0; i < codes.size(); ++i) {
    const auto bits = codes.code(i).unpack();
    for (std::size_t k = 0; k < bits.size(); ++k) out << (k ? "," : "") << bits[k];
    out << '\n';
  }
}

}  // namespace mihash
