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

// Hash mapping: a single linear layer followed by sign thresholding, plus the
// scaled-sigmoid relaxation used during training.
//
// Conventions used throughout the library:
//   * features are stored one item per column (n x N),
//   * codes and activations are stored one item per column (b x N),
//   * a bit value of +1 is a set bit in the packed representation.
//
// There is no bias term. Append a constant feature to emulate one.

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "mihash/error.hpp"

namespace mihash {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// A b-bit code over {-1,+1}, packed 64 bits per word. Words beyond bit b are
// kept zero so XOR + popcount counts only real positions.
class BinaryCode {
 public:
  BinaryCode() = default;
  // All bits -1.
  explicit BinaryCode(int length);

  static BinaryCode from_signs(std::span<const int> signs);
  static BinaryCode from_words(int length, std::span<const std::uint64_t> words);

  int length() const { return length_; }
  int bit(int i) const;
  void set(int i, int sign);
  std::span<const std::uint64_t> words() const { return words_; }
  std::vector<int> unpack() const;

  static int word_count(int length) { return (length + 63) / 64; }

  bool operator==(const BinaryCode&) const = default;

 private:
  int length_ = 0;
  std::vector<std::uint64_t> words_;
};

class HashModel {
 public:
  // weights is b x n; one row per bit function.
  HashModel(Matrix weights, double gamma);

  // i.i.d. N(0, 1/n) weights.
  static HashModel gaussian(int input_dim, int code_length, double gamma,
                            std::uint64_t seed);

  int input_dim() const { return static_cast<int>(weights_.cols()); }
  int code_length() const { return static_cast<int>(weights_.rows()); }
  double gamma() const { return gamma_; }
  const Matrix& weights() const { return weights_; }

  // Replaces the weights; the shape must not change and entries must be
  // finite.
  void set_weights(Matrix weights);

 private:
  Matrix weights_;
  double gamma_;
};

Vector forward_linear(const HashModel& model, const Eigen::Ref<const Vector>& x);

// Column-wise forward pass: features n x M -> activations b x M.
Matrix forward_linear_batch(const HashModel& model,
                            const Eigen::Ref<const Matrix>& features);

namespace detail {

inline void check_gamma(double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw_invalid("gamma must be a positive finite number");
  }
}

inline double relax_scalar(double f, double gamma) {
  // 2*sigmoid(x) - 1 == tanh(x/2). Clamped so saturated values stay inside
  // the open interval.
  constexpr double kEdge = 1.0 - std::numeric_limits<double>::epsilon() / 2;
  double v = std::tanh(0.5 * gamma * f);
  if (v > kEdge) v = kEdge;
  if (v < -kEdge) v = -kEdge;
  return v;
}

inline double relax_derivative_scalar(double f, double gamma) {
  // 2*gamma*s*(1-s) with s = sigmoid(gamma*f), written with exp(-|x|) so it
  // does not cancel for large |x|.
  const double e = std::exp(-std::abs(gamma * f));
  const double v = 2.0 * gamma * e / ((1.0 + e) * (1.0 + e));
  return std::max(v, std::numeric_limits<double>::min());
}

template <typename Derived>
void check_finite(const Eigen::MatrixBase<Derived>& m, const char* what) {
  if (!m.allFinite()) throw_invalid(std::string(what) + " contains non-finite values");
}

}  // namespace detail

// Elementwise 2*sigmoid(gamma*f) - 1.
template <typename Derived>
typename Derived::PlainObject relax(const Eigen::MatrixBase<Derived>& activations,
                                    double gamma) {
  detail::check_gamma(gamma);
  detail::check_finite(activations, "activations");
  return activations.unaryExpr(
      [gamma](double f) { return detail::relax_scalar(f, gamma); });
}

// Elementwise derivative of relax with respect to the activation.
template <typename Derived>
typename Derived::PlainObject relax_jacobian_diag(
    const Eigen::MatrixBase<Derived>& activations, double gamma) {
  detail::check_gamma(gamma);
  detail::check_finite(activations, "activations");
  return activations.unaryExpr(
      [gamma](double f) { return detail::relax_derivative_scalar(f, gamma); });
}

// sgn with sgn(0) = +1.
BinaryCode binarize(const Eigen::Ref<const Vector>& activations);

// Binarizes every column of a b x N activation matrix.
std::vector<BinaryCode> binarize_columns(const Eigen::Ref<const Matrix>& activations);

// "MIH1" model file: magic, n (u32), b (u32), gamma (f64), then b*n row-major
// f64 weights. All little-endian.
void save_model(const HashModel& model, const std::filesystem::path& path);
HashModel load_model(const std::filesystem::path& path);

// Human-readable JSON dump, for debugging only.
std::string model_to_json(const HashModel& model);

}  // namespace mihash
