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

#include "mihash/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <unordered_set>

#include "binary_io.hpp"

namespace mihash {

Matrix FeatureMatrix::gather(std::span<const std::size_t> indices) const {
  Matrix out(values.rows(), static_cast<Eigen::Index>(indices.size()));
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] >= count()) detail::throw_invalid("feature index out of range");
    out.col(static_cast<Eigen::Index>(k)) = values.col(static_cast<Eigen::Index>(indices[k]));
  }
  return out;
}

Standardizer Standardizer::fit(const FeatureMatrix& features, std::span<const std::size_t> indices) {
  if (indices.empty()) detail::throw_invalid("cannot fit normalization on zero items");
  const Matrix sample = features.gather(indices);
  Standardizer s;
  s.mean = sample.rowwise().mean();
  const Matrix centered = sample.colwise() - s.mean;
  s.scale = (centered.array().square().rowwise().sum() / static_cast<double>(indices.size()))
                .sqrt()
                .matrix();
  for (Eigen::Index d = 0; d < s.scale.size(); ++d) {
    if (!(s.scale[d] > 0.0)) s.scale[d] = 1.0;
  }
  return s;
}

void Standardizer::apply(FeatureMatrix& features) const {
  if (features.values.rows() != mean.size()) detail::throw_invalid("normalization dimension mismatch");
  features.values = ((features.values.colwise() - mean).array().colwise() / scale.array()).matrix();
}

void Standardizer::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) detail::throw_invalid("cannot open for writing: " + path.string());
  char buf[32];
  for (const Vector* row : {&mean, &scale}) {
    for (Eigen::Index d = 0; d < row->size(); ++d) {
      std::snprintf(buf, sizeof(buf), "%.17g", (*row)[d]);
      out << (d ? "," : "") << buf;
    }
    out << '\n';
  }
}

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<double> parse_csv_row(const std::string& line, const std::string& where) {
  std::vector<double> row;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    const std::string cell =
        trim(std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos
                                                                             : comma - start));
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size()) {
      throw ParseError(where + ": cannot parse number \"" + cell + "\"");
    }
    row.push_back(v);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return row;
}

}  // namespace

Standardizer Standardizer::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open: " + path.string());
  std::string line;
  Standardizer s;
  for (int k = 0; k < 2; ++k) {
    if (!std::getline(in, line)) throw ParseError(path.string() + ": expected two rows");
    const auto row = parse_csv_row(line, path.string() + ":" + std::to_string(k + 1));
    Vector v = Eigen::Map<const Vector>(row.data(), static_cast<Eigen::Index>(row.size()));
    (k == 0 ? s.mean : s.scale) = v;
  }
  if (s.mean.size() != s.scale.size()) throw ParseError(path.string() + ": row lengths differ");
  return s;
}

LabelSet::LabelSet(std::span<const int> labels) {
  for (int l : labels) {
    if (l < 0) detail::throw_invalid("labels must be non-negative");
    const auto w = static_cast<std::size_t>(l) / 64;
    if (w >= words_.size()) words_.resize(w + 1, 0);
    words_[w] |= std::uint64_t{1} << (l % 64);
  }
}

bool LabelSet::intersects(const LabelSet& other) const {
  const std::size_t n = std::min(words_.size(), other.words_.size());
  for (std::size_t w = 0; w < n; ++w) {
    if (words_[w] & other.words_[w]) return true;
  }
  return false;
}

bool LabelSet::contains(int label) const {
  if (label < 0) return false;
  const auto w = static_cast<std::size_t>(label) / 64;
  return w < words_.size() && ((words_[w] >> (label % 64)) & 1u);
}

std::vector<int> LabelSet::labels() const {
  std::vector<int> out;
  for (std::size_t w = 0; w < words_.size(); ++w) {
    for (int bit = 0; bit < 64; ++bit) {
      if ((words_[w] >> bit) & 1u) out.push_back(static_cast<int>(w * 64 + bit));
    }
  }
  return out;
}

bool LabelSet::empty() const {
  return std::all_of(words_.begin(), words_.end(), [](std::uint64_t w) { return w == 0; });
}

void Dataset::validate() const {
  const std::size_t n = size();
  for (const auto* split : {&splits.train, &splits.retrieval, &splits.test}) {
    for (std::size_t i : *split) {
      if (i >= n) detail::throw_invalid("split index " + std::to_string(i) + " >= dataset size");
    }
  }
  const std::unordered_set<std::size_t> retrieval(splits.retrieval.begin(), splits.retrieval.end());
  for (std::size_t i : splits.test) {
    if (retrieval.count(i)) {
      detail::throw_invalid("item " + std::to_string(i) + " is in both test and retrieval splits");
    }
  }
  std::visit(
      [&](const auto& l) {
        if constexpr (!std::is_same_v<std::decay_t<decltype(l)>, std::monostate>) {
          if (l.size() != n) detail::throw_invalid("label count does not match feature count");
        }
      },
      labels);
}

OracleMode parse_oracle_mode(const std::string& name) {
  if (name == "single_label") return OracleMode::kSingleLabel;
  if (name == "multi_label") return OracleMode::kMultiLabel;
  if (name == "metric_threshold") return OracleMode::kMetricThreshold;
  throw InvalidConfig("unknown oracle mode \"" + name +
                      "\" (expected single_label, multi_label or metric_threshold)");
}

std::string to_string(OracleMode mode) {
  switch (mode) {
    case OracleMode::kSingleLabel: return "single_label";
    case OracleMode::kMultiLabel: return "multi_label";
    case OracleMode::kMetricThreshold: return "metric_threshold";
  }
  return "unknown";
}

AffinityOracle::AffinityOracle(std::shared_ptr<const Dataset> dataset, OracleMode mode,
                               double threshold_distance, double percentile)
    : dataset_(std::move(dataset)),
      mode_(mode),
      threshold_(threshold_distance),
      threshold_sq_(threshold_distance * threshold_distance),
      percentile_(percentile) {
  if (!dataset_) detail::throw_invalid("oracle needs a dataset");
  switch (mode_) {
    case OracleMode::kSingleLabel:
      if (!std::holds_alternative<std::vector<int>>(dataset_->labels)) {
        throw InvalidConfig("single_label oracle needs exactly one label per item");
      }
      break;
    case OracleMode::kMultiLabel:
      if (std::holds_alternative<std::monostate>(dataset_->labels)) {
        throw InvalidConfig("multi_label oracle needs labels");
      }
      break;
    case OracleMode::kMetricThreshold:
      if (!(threshold_distance >= 0.0)) detail::throw_invalid("negative distance threshold");
      break;
  }
}

bool AffinityOracle::is_neighbor(std::size_t i, std::size_t j) const {
  if (i == j) return false;
  switch (mode_) {
    case OracleMode::kSingleLabel: {
      const auto& l = std::get<std::vector<int>>(dataset_->labels);
      return l[i] == l[j];
    }
    case OracleMode::kMultiLabel: {
      if (const auto* single = std::get_if<std::vector<int>>(&dataset_->labels)) {
        return (*single)[i] == (*single)[j];
      }
      const auto& sets = std::get<std::vector<LabelSet>>(dataset_->labels);
      return sets[i].intersects(sets[j]);
    }
    case OracleMode::kMetricThreshold: {
      const auto& x = dataset_->features.values;
      return (x.col(static_cast<Eigen::Index>(i)) - x.col(static_cast<Eigen::Index>(j))).squaredNorm() <
             threshold_sq_;
    }
  }
  return false;
}

AffinityMatrix AffinityOracle::batch_affinity(std::span<const std::size_t> indices) const {
  return AffinityMatrix::from_predicate(static_cast<int>(indices.size()), [&](int a, int b) {
    return is_neighbor(indices[a], indices[b]);
  });
}

void AffinityOracle::relevance_row(std::size_t query, std::span<const std::size_t> db,
                                   std::vector<std::uint8_t>& out) const {
  out.resize(db.size());
  for (std::size_t k = 0; k < db.size(); ++k) out[k] = is_neighbor(query, db[k]) ? 1 : 0;
}

double percentile_of(std::vector<double>& values, double p) {
  if (values.empty()) detail::throw_invalid("percentile of an empty sample");
  if (!(p >= 0.0 && p <= 100.0)) detail::throw_invalid("percentile outside [0, 100]");
  std::sort(values.begin(), values.end());
  const double rank = p / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (rank - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

AffinityOracle build_oracle(std::shared_ptr<const Dataset> dataset, OracleMode mode,
                            const OracleOptions& options) {
  if (!dataset) detail::throw_invalid("oracle needs a dataset");
  if (mode != OracleMode::kMetricThreshold) return AffinityOracle(std::move(dataset), mode);

  if (!(options.percentile > 0.0 && options.percentile < 100.0)) {
    throw InvalidConfig("percentile must lie in (0, 100)");
  }
  const auto& train = dataset->splits.train;
  if (train.size() < 2) throw InvalidConfig("metric oracle needs at least two training items");
  const auto& x = dataset->features.values;
  auto distance = [&](std::size_t a, std::size_t b) {
    return (x.col(static_cast<Eigen::Index>(a)) - x.col(static_cast<Eigen::Index>(b))).norm();
  };

  std::vector<double> sample;
  const double all_pairs = 0.5 * static_cast<double>(train.size()) * static_cast<double>(train.size() - 1);
  if (all_pairs <= static_cast<double>(options.max_pairs)) {
    sample.reserve(static_cast<std::size_t>(all_pairs));
    for (std::size_t a = 0; a < train.size(); ++a) {
      for (std::size_t b = a + 1; b < train.size(); ++b) sample.push_back(distance(train[a], train[b]));
    }
  } else {
    std::mt19937_64 rng(options.seed);
    std::uniform_int_distribution<std::size_t> pick(0, train.size() - 1);
    sample.reserve(options.max_pairs);
    while (sample.size() < options.max_pairs) {
      const std::size_t a = pick(rng), b = pick(rng);
      if (a != b) sample.push_back(distance(train[a], train[b]));
    }
  }
  const double threshold = percentile_of(sample, options.percentile);
  return AffinityOracle(std::move(dataset), mode, threshold, options.percentile);
}

FeatureFormat guess_feature_format(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? FeatureFormat::kCsv : FeatureFormat::kBinary;
}

FeatureMatrix load_features(const std::filesystem::path& path, FeatureFormat format) {
  FeatureMatrix out;
  if (format == FeatureFormat::kBinary) {
    io::LittleEndianReader in(path);
    in.expect_magic("MIF1");
    const auto count = in.get<std::uint32_t>();
    const auto dim = in.get<std::uint32_t>();
    if (dim == 0) throw ParseError(path.string() + ": zero feature dimension at byte offset 8");
    out.values.resize(dim, count);
    for (std::uint32_t i = 0; i < count; ++i) {
      for (std::uint32_t d = 0; d < dim; ++d) out.values(d, i) = in.get<float>();
    }
    in.expect_end();
    return out;
  }

  std::ifstream in(path);
  if (!in) throw ParseError("cannot open: " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    rows.push_back(parse_csv_row(line, where));
    if (rows.back().size() != rows.front().size()) {
      throw ParseError(where + ": row " + std::to_string(rows.size()) + " has " +
                       std::to_string(rows.back().size()) + " values, expected " +
                       std::to_string(rows.front().size()));
    }
  }
  if (rows.empty()) throw ParseError(path.string() + ": no rows");
  out.values.resize(static_cast<Eigen::Index>(rows.front().size()), static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t d = 0; d < rows[i].size(); ++d) out.values(d, i) = rows[i][d];
  }
  return out;
}

void save_features(const FeatureMatrix& features, const std::filesystem::path& path,
                   FeatureFormat format) {
  if (format == FeatureFormat::kBinary) {
    io::LittleEndianWriter out(path);
    out.magic("MIF1");
    out.put(static_cast<std::uint32_t>(features.count()));
    out.put(static_cast<std::uint32_t>(features.dim()));
    for (Eigen::Index i = 0; i < features.values.cols(); ++i) {
      for (Eigen::Index d = 0; d < features.values.rows(); ++d) {
        out.put(static_cast<float>(features.values(d, i)));
      }
    }
    out.finish();
    return;
  }
  std::ofstream out(path);
  if (!out) detail::throw_invalid("cannot open for writing: " + path.string());
  char buf[32];
  for (Eigen::Index i = 0; i < features.values.cols(); ++i) {
    for (Eigen::Index d = 0; d < features.values.rows(); ++d) {
      std::snprintf(buf, sizeof(buf), "%.17g", features.values(d, i));
      out << (d ? "," : "") << buf;
    }
    out << '\n';
  }
}

Labels load_labels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open: " + path.string());
  std::vector<std::vector<int>> rows;
  std::string line;
  bool single = true;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream tokens(line);
    std::vector<int> row;
    std::string tok;
    while (tokens >> tok) {
      int v = 0;
      const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (ec != std::errc() || ptr != tok.data() + tok.size() || v < 0) {
        throw ParseError(path.string() + ":" + std::to_string(line_no) + ": bad label \"" + tok + "\"");
      }
      row.push_back(v);
    }
    single = single && row.size() == 1;
    rows.push_back(std::move(row));
  }
  if (single) {
    std::vector<int> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r.front());
    return out;
  }
  std::vector<LabelSet> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.emplace_back(r);
  return out;
}

void save_labels(const Labels& labels, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) detail::throw_invalid("cannot open for writing: " + path.string());
  if (const auto* single = std::get_if<std::vector<int>>(&labels)) {
    for (int l : *single) out << l << '\n';
  } else if (const auto* sets = std::get_if<std::vector<LabelSet>>(&labels)) {
    for (const auto& s : *sets) {
      const auto ls = s.labels();
      for (std::size_t k = 0; k < ls.size(); ++k) out << (k ? " " : "") << ls[k];
      out << '\n';
    }
  }
}

Splits load_splits(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open: " + path.string());
  Splits splits;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream tokens(line);
    std::string name;
    if (!(tokens >> name)) continue;
    std::vector<std::size_t>* target = name == "train"       ? &splits.train
                                       : name == "retrieval" ? &splits.retrieval
                                       : name == "test"      ? &splits.test
                                                             : nullptr;
    if (!target) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": unknown split \"" + name + "\"");
    }
    std::string tok;
    while (tokens >> tok) {
      std::size_t v = 0;
      const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (ec != std::errc() || ptr != tok.data() + tok.size()) {
        throw ParseError(path.string() + ":" + std::to_string(line_no) + ": bad index \"" + tok + "\"");
      }
      target->push_back(v);
    }
  }
  return splits;
}

void save_splits(const Splits& splits, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) detail::throw_invalid("cannot open for writing: " + path.string());
  auto write = [&](const char* name, const std::vector<std::size_t>& idx) {
    out << name;
    for (std::size_t i : idx) out << ' ' << i;
    out << '\n';
  };
  write("train", splits.train);
  write("retrieval", splits.retrieval);
  write("test", splits.test);
}

Dataset synth_dataset(const SynthOptions& o) {
  if (o.classes < 1 || o.per_class < 1 || o.dim < 1) detail::throw_invalid("synthetic sizes must be positive");
  if (!(o.separation >= 0.0)) detail::throw_invalid("separation must be non-negative");
  if (o.test_per_class < 0 || o.test_per_class > o.per_class) {
    detail::throw_invalid("test_per_class must lie in [0, per_class]");
  }
  std::mt19937_64 rng(o.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  Matrix centers(o.dim, o.classes);
  for (int c = 0; c < o.classes; ++c) {
    Vector dir(o.dim);
    do {
      for (auto& v : dir) v = normal(rng);
    } while (dir.norm() == 0.0);
    centers.col(c) = o.separation * dir.normalized();
  }

  Dataset ds;
  const int total = o.classes * o.per_class;
  ds.features.values.resize(o.dim, total);
  std::vector<int> labels(total);
  for (int c = 0; c < o.classes; ++c) {
    for (int k = 0; k < o.per_class; ++k) {
      const int idx = c * o.per_class + k;
      labels[idx] = c;
      for (int d = 0; d < o.dim; ++d) ds.features.values(d, idx) = centers(d, c) + normal(rng);
      auto& split = k < o.test_per_class ? ds.splits.test : ds.splits.retrieval;
      split.push_back(static_cast<std::size_t>(idx));
    }
  }
  ds.splits.train = ds.splits.retrieval;
  ds.labels = std::move(labels);
  return ds;
}

}  // namespace mihash
