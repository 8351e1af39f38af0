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

#include "mihash/embedding.hpp"

#include <json.hpp>

#include <random>

#include "binary_io.hpp"

namespace mihash {

BinaryCode::BinaryCode(int length) : length_(length) {
  if (length < 1) detail::throw_invalid("code length must be >= 1");
  words_.assign(word_count(length), 0);
}

BinaryCode BinaryCode::from_signs(std::span<const int> signs) {
  BinaryCode code(static_cast<int>(signs.size()));
  for (std::size_t i = 0; i < signs.size(); ++i) code.set(static_cast<int>(i), signs[i]);
  return code;
}

BinaryCode BinaryCode::from_words(int length, std::span<const std::uint64_t> words) {
  BinaryCode code(length);
  if (static_cast<int>(words.size()) != word_count(length)) {
    detail::throw_invalid("word count does not match code length");
  }
  std::copy(words.begin(), words.end(), code.words_.begin());
  const int tail = length % 64;
  if (tail != 0 && (code.words_.back() >> tail) != 0) {
    detail::throw_invalid("padding bits beyond the code length must be zero");
  }
  return code;
}

int BinaryCode::bit(int i) const {
  if (i < 0 || i >= length_) detail::throw_invalid("bit index out of range");
  return ((words_[i / 64] >> (i % 64)) & 1u) ? +1 : -1;
}

void BinaryCode::set(int i, int sign) {
  if (i < 0 || i >= length_) detail::throw_invalid("bit index out of range");
  if (sign != 1 && sign != -1) detail::throw_invalid("bit value must be -1 or +1");
  const std::uint64_t mask = std::uint64_t{1} << (i % 64);
  if (sign > 0) {
    words_[i / 64] |= mask;
  } else {
    words_[i / 64] &= ~mask;
  }
}

std::vector<int> BinaryCode::unpack() const {
  std::vector<int> out(length_);
  for (int i = 0; i < length_; ++i) out[i] = bit(i);
  return out;
}

HashModel::HashModel(Matrix weights, double gamma) : weights_(std::move(weights)), gamma_(gamma) {
  if (weights_.rows() < 1 || weights_.cols() < 1) {
    detail::throw_invalid("weight matrix must be at least 1x1");
  }
  detail::check_gamma(gamma_);
  detail::check_finite(weights_, "weights");
}

HashModel HashModel::gaussian(int input_dim, int code_length, double gamma,
                              std::uint64_t seed) {
  if (input_dim < 1 || code_length < 1) detail::throw_invalid("dimensions must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(input_dim)));
  Matrix w(code_length, input_dim);
  // Row-major fill so the draw order matches the file layout.
  for (int r = 0; r < code_length; ++r) {
    for (int c = 0; c < input_dim; ++c) w(r, c) = normal(rng);
  }
  return HashModel(std::move(w), gamma);
}

void HashModel::set_weights(Matrix weights) {
  if (weights.rows() != weights_.rows() || weights.cols() != weights_.cols()) {
    detail::throw_invalid("weight shape cannot change");
  }
  detail::check_finite(weights, "weights");
  weights_ = std::move(weights);
}

Vector forward_linear(const HashModel& model, const Eigen::Ref<const Vector>& x) {
  if (x.size() != model.input_dim()) {
    detail::throw_invalid("feature dimension " + std::to_string(x.size()) +
                          " does not match model input dimension " +
                          std::to_string(model.input_dim()));
  }
  detail::check_finite(x, "features");
  return model.weights() * x;
}

Matrix forward_linear_batch(const HashModel& model, const Eigen::Ref<const Matrix>& features) {
  if (features.rows() != model.input_dim()) {
    detail::throw_invalid("feature dimension " + std::to_string(features.rows()) +
                          " does not match model input dimension " +
                          std::to_string(model.input_dim()));
  }
  detail::check_finite(features, "features");
  return model.weights() * features;
}

BinaryCode binarize(const Eigen::Ref<const Vector>& activations) {
  detail::check_finite(activations, "activations");
  BinaryCode code(static_cast<int>(activations.size()));
  for (Eigen::Index i = 0; i < activations.size(); ++i) {
    code.set(static_cast<int>(i), activations[i] >= 0.0 ? +1 : -1);
  }
  return code;
}

std::vector<BinaryCode> binarize_columns(const Eigen::Ref<const Matrix>& activations) {
  std::vector<BinaryCode> codes;
  codes.reserve(activations.cols());
  for (Eigen::Index j = 0; j < activations.cols(); ++j) {
    codes.push_back(binarize(activations.col(j)));
  }
  return codes;
}

void save_model(const HashModel& model, const std::filesystem::path& path) {
  io::LittleEndianWriter out(path);
  out.magic("MIH1");
  out.put(static_cast<std::uint32_t>(model.input_dim()));
  out.put(static_cast<std::uint32_t>(model.code_length()));
  out.put(model.gamma());
  const Matrix& w = model.weights();
  for (Eigen::Index r = 0; r < w.rows(); ++r) {
    for (Eigen::Index c = 0; c < w.cols(); ++c) out.put(w(r, c));
  }
  out.finish();
}

HashModel load_model(const std::filesystem::path& path) {
  io::LittleEndianReader in(path);
  in.expect_magic("MIH1");
  const auto n = in.get<std::uint32_t>();
  const auto b = in.get<std::uint32_t>();
  const auto gamma = in.get<double>();
  if (n == 0 || b == 0) throw ParseError(path.string() + ": zero dimension in header");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw ParseError(path.string() + ": gamma must be positive at byte offset 12");
  }
  Matrix w(b, n);
  for (std::uint32_t r = 0; r < b; ++r) {
    for (std::uint32_t c = 0; c < n; ++c) w(r, c) = in.get<double>();
  }
  in.expect_end();
  if (!w.allFinite()) throw ParseError(path.string() + ": non-finite weight");
  return HashModel(std::move(w), gamma);
}

std::string model_to_json(const HashModel& model) {
  nlohmann::json j;
  j["input_dim"] = model.input_dim();
  j["code_length"] = model.code_length();
  j["gamma"] = model.gamma();
  auto rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < model.weights().rows(); ++r) {
    std::vector<double> row(model.weights().cols());
    for (Eigen::Index c = 0; c < model.weights().cols(); ++c) row[c] = model.weights()(r, c);
    rows.push_back(row);
  }
  j["weights"] = rows;
  return j.dump(2);
}

}  // namespace mihash
