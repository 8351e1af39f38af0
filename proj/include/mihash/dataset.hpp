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

// Datasets, their file formats, and the pairwise neighbor oracle.
//
// On-disk layout of a dataset is three files:
//   features  "MIF1" binary (magic, N u32, n u32, N*n row-major f32, LE) or CSV
//             with one item per row;
//   labels    text, one line per item, whitespace-separated non-negative
//             integer labels (exactly one per line for single-label data);
//   splits    text, lines "train|retrieval|test <index> <index> ...".

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "mihash/embedding.hpp"
#include "mihash/minibatch_grad.hpp"

namespace mihash {

// N items of dimension n, stored one item per column (n x N).
struct FeatureMatrix {
  Matrix values;

  int dim() const { return static_cast<int>(values.rows()); }
  std::size_t count() const { return static_cast<std::size_t>(values.cols()); }
  Matrix gather(std::span<const std::size_t> indices) const;
};

// Per-dimension affine normalization x -> (x - mean) / scale.
struct Standardizer {
  Vector mean;
  Vector scale;

  // Statistics over the listed items. Dimensions with zero variance keep
  // scale 1.
  static Standardizer fit(const FeatureMatrix& features, std::span<const std::size_t> indices);
  void apply(FeatureMatrix& features) const;

  // Two-line CSV: means, then scales.
  void save(const std::filesystem::path& path) const;
  static Standardizer load(const std::filesystem::path& path);
};

// A set of concept ids packed into 64-bit words.
class LabelSet {
 public:
  LabelSet() = default;
  explicit LabelSet(std::span<const int> labels);

  bool intersects(const LabelSet& other) const;
  bool contains(int label) const;
  std::vector<int> labels() const;
  bool empty() const;

  bool operator==(const LabelSet&) const = default;

 private:
  std::vector<std::uint64_t> words_;
};

using Labels = std::variant<std::monostate, std::vector<int>, std::vector<LabelSet>>;

struct Splits {
  std::vector<std::size_t> train;
  std::vector<std::size_t> retrieval;
  std::vector<std::size_t> test;

  bool operator==(const Splits&) const = default;
};

struct Dataset {
  FeatureMatrix features;
  Labels labels;
  Splits splits;

  std::size_t size() const { return features.count(); }
  // Indices in range; test disjoint from retrieval; label count matches.
  void validate() const;
};

enum class OracleMode { kSingleLabel, kMultiLabel, kMetricThreshold };

OracleMode parse_oracle_mode(const std::string& name);
std::string to_string(OracleMode mode);

// Symmetric, irreflexive neighbor relation over dataset indices. Holds a
// shared reference to the dataset it was built from.
class AffinityOracle {
 public:
  AffinityOracle(std::shared_ptr<const Dataset> dataset, OracleMode mode,
                 double threshold_distance = 0.0, double percentile = 0.0);

  OracleMode mode() const { return mode_; }
  double threshold_distance() const { return threshold_; }
  double percentile() const { return percentile_; }
  const Dataset& dataset() const { return *dataset_; }

  // False for i == j.
  bool is_neighbor(std::size_t i, std::size_t j) const;

  AffinityMatrix batch_affinity(std::span<const std::size_t> indices) const;

  // Flags for is_neighbor(query, db[k]) for every k.
  void relevance_row(std::size_t query, std::span<const std::size_t> db,
                     std::vector<std::uint8_t>& out) const;

 private:
  std::shared_ptr<const Dataset> dataset_;
  OracleMode mode_;
  double threshold_;
  double threshold_sq_;
  double percentile_;
};

struct OracleOptions {
  double percentile = 5.0;            // metric mode only
  std::uint64_t seed = 0;             // pair subsampling
  std::size_t max_pairs = 1'000'000;  // exact all-pairs below this
};

// Metric mode: Euclidean distances over pairs of training items, threshold at
// the given percentile (linear interpolation between order statistics); a
// pair is a neighbor when its distance is strictly below the threshold.
AffinityOracle build_oracle(std::shared_ptr<const Dataset> dataset, OracleMode mode,
                            const OracleOptions& options = {});

// Linear-interpolation percentile of `values` (sorted in place), p in [0, 100].
double percentile_of(std::vector<double>& values, double p);

enum class FeatureFormat { kCsv, kBinary };

// Chosen from the extension: ".csv" is CSV, anything else binary.
FeatureFormat guess_feature_format(const std::filesystem::path& path);

FeatureMatrix load_features(const std::filesystem::path& path, FeatureFormat format);
void save_features(const FeatureMatrix& features, const std::filesystem::path& path,
                   FeatureFormat format);

Labels load_labels(const std::filesystem::path& path);
void save_labels(const Labels& labels, const std::filesystem::path& path);

Splits load_splits(const std::filesystem::path& path);
void save_splits(const Splits& splits, const std::filesystem::path& path);

struct SynthOptions {
  int classes = 10;
  int per_class = 100;
  int dim = 32;
  double separation = 5.0;
  std::uint64_t seed = 0;
  int test_per_class = 10;  // held out per class as queries
};

// Gaussian clusters with unit covariance around centers drawn uniformly on
// the sphere of radius `separation`. Single labels. The test split takes
// test_per_class items per class; retrieval and train are the rest.
Dataset synth_dataset(const SynthOptions& options);

}  // namespace mihash
