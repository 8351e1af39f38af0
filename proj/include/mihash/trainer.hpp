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

// Minibatch SGD with momentum on the minibatch MI objective.
//
// The objective is maximized. Internally the optimizer minimizes its
// negation, so `sgd_step` receives the ascent direction and flips it.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "mihash/dataset.hpp"
#include "mihash/embedding.hpp"
#include "mihash/minibatch_grad.hpp"

namespace mihash {

struct TrainConfig {
  int code_length = 32;
  int batch_size = 256;
  int epochs = 20;
  // 0 = floor(|train| / batch_size), at least 1.
  int batches_per_epoch = 0;
  double lr = 0.1;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  double lr_decay_factor = 0.5;
  int lr_decay_period = 10;
  double gamma = 1.0;
  std::uint64_t seed = 0;
  // Equal draws per class (single-label data only).
  bool balanced_batches = false;

  // Throws InvalidConfig naming the offending field.
  void validate() const;
};

struct OptimizerState {
  Matrix velocity;
  std::int64_t step_count = 0;
  double current_lr = 0.0;

  static OptimizerState for_weights(const Matrix& weights, double lr);
};

// lr * factor^floor(epoch / period), epoch counted from 0.
double scheduled_lr(const TrainConfig& config, int epoch);

struct Batch {
  std::vector<std::size_t> indices;
  Matrix features;  // n x M
  AffinityMatrix affinity;
};

// M distinct items of `pool`, uniformly without replacement (or balanced per
// class), with features and in-batch affinity filled in.
Batch sample_minibatch(const AffinityOracle& oracle, std::span<const std::size_t> pool,
                       int batch_size, std::mt19937_64& rng, bool balanced = false);

// dO_B/dW = (J .* relax'(W X)) X^T for features X (n x M) and batch
// Jacobian J (b x M).
Matrix backprop_to_weights(const HashModel& model, const Eigen::Ref<const Matrix>& features,
                           const Eigen::Ref<const Matrix>& batch_jacobian);

// v <- momentum * v - lr * (-objective_grad + weight_decay * W); W <- W + v.
// Throws TrainingAborted on non-finite input.
void sgd_step(Matrix& weights, const Matrix& objective_grad, OptimizerState& state,
              const TrainConfig& config);

// O_B, weight gradient and per-query MI for one batch.
struct BatchStep {
  double objective = 0.0;
  Matrix weight_grad;
};
BatchStep batch_gradient(const HashModel& model, const Batch& batch);

struct EpochLog {
  int epoch = 0;  // 1-based
  double mean_objective = 0.0;
  double lr = 0.0;
  std::optional<double> val_map;
};

struct TrainResult {
  HashModel model;
  std::vector<EpochLog> log;
};

using ValidationFn = std::function<double(const HashModel&)>;

// Runs `config.epochs` epochs over the training split of the oracle's
// dataset. Starts from `initial` when given, else from a Gaussian model
// seeded with config.seed. `validate`, when set, is called after every epoch
// and its value logged as val_map.
TrainResult train(const AffinityOracle& oracle, const TrainConfig& config,
                  std::optional<HashModel> initial = std::nullopt,
                  const ValidationFn& validate = {});

// CSV "epoch,mean_objective,lr[,val_map]".
void write_train_log(const std::vector<EpochLog>& log, const std::filesystem::path& path);

}  // namespace mihash
