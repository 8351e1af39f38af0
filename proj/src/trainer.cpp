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

#include "mihash/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

namespace mihash {

void TrainConfig::validate() const {
  auto fail = [](const std::string& what) { throw InvalidConfig(what); };
  if (code_length < 1) fail("code_length must be >= 1");
  if (batch_size < 2) fail("batch_size must be >= 2");
  if (epochs < 0) fail("epochs must be >= 0");
  if (batches_per_epoch < 0) fail("batches_per_epoch must be >= 0");
  if (!(lr > 0.0) || !std::isfinite(lr)) fail("lr must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) fail("momentum must lie in [0, 1)");
  if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay)) fail("weight_decay must be >= 0");
  if (!(lr_decay_factor > 0.0 && lr_decay_factor <= 1.0)) fail("lr_decay_factor must lie in (0, 1]");
  if (lr_decay_period < 1) fail("lr_decay_period must be >= 1");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) fail("gamma must be positive");
}

OptimizerState OptimizerState::for_weights(const Matrix& weights, double lr) {
  OptimizerState s;
  s.velocity = Matrix::Zero(weights.rows(), weights.cols());
  s.current_lr = lr;
  return s;
}

double scheduled_lr(const TrainConfig& config, int epoch) {
  return config.lr * std::pow(config.lr_decay_factor, epoch / config.lr_decay_period);
}

namespace {

std::vector<std::size_t> uniform_sample(std::span<const std::size_t> pool, int m,
                                        std::mt19937_64& rng) {
  std::vector<std::size_t> items(pool.begin(), pool.end());
  for (int k = 0; k < m; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, items.size() - 1);
    std::swap(items[k], items[pick(rng)]);
  }
  items.resize(m);
  return items;
}

std::vector<std::size_t> balanced_sample(const Dataset& ds, std::span<const std::size_t> pool, int m,
                                         std::mt19937_64& rng) {
  const auto* labels = std::get_if<std::vector<int>>(&ds.labels);
  if (!labels) throw InvalidConfig("balanced_batches needs single-label data");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i : pool) by_class[(*labels)[i]].push_back(i);
  std::vector<std::vector<std::size_t>> groups;
  for (auto& [label, items] : by_class) {
    std::shuffle(items.begin(), items.end(), rng);
    groups.push_back(std::move(items));
  }
  std::shuffle(groups.begin(), groups.end(), rng);
  std::vector<std::size_t> out;
  out.reserve(m);
  for (std::size_t round = 0; static_cast<int>(out.size()) < m; ++round) {
    for (const auto& g : groups) {
      if (round < g.size() && static_cast<int>(out.size()) < m) out.push_back(g[round]);
    }
  }
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

}  // namespace

Batch sample_minibatch(const AffinityOracle& oracle, std::span<const std::size_t> pool,
                       int batch_size, std::mt19937_64& rng, bool balanced) {
  if (batch_size < 2) detail::throw_invalid("batch size must be >= 2");
  if (pool.size() < static_cast<std::size_t>(batch_size)) {
    detail::throw_invalid("training pool of " + std::to_string(pool.size()) +
                          " items is smaller than the batch size " + std::to_string(batch_size));
  }
  Batch batch;
  batch.indices = balanced ? balanced_sample(oracle.dataset(), pool, batch_size, rng)
                           : uniform_sample(pool, batch_size, rng);
  batch.features = oracle.dataset().features.gather(batch.indices);
  batch.affinity = oracle.batch_affinity(batch.indices);
  return batch;
}

Matrix backprop_to_weights(const HashModel& model, const Eigen::Ref<const Matrix>& features,
                           const Eigen::Ref<const Matrix>& batch_jacobian) {
  if (batch_jacobian.rows() != model.code_length() || batch_jacobian.cols() != features.cols()) {
    detail::throw_invalid("batch Jacobian must be b x M");
  }
  const Matrix activations = forward_linear_batch(model, features);
  const Matrix slope = relax_jacobian_diag(activations, model.gamma());
  return batch_jacobian.cwiseProduct(slope) * features.transpose();
}

void sgd_step(Matrix& weights, const Matrix& objective_grad, OptimizerState& state,
              const TrainConfig& config) {
  if (objective_grad.rows() != weights.rows() || objective_grad.cols() != weights.cols()) {
    detail::throw_invalid("gradient shape does not match weights");
  }
  if (!objective_grad.allFinite()) {
    throw TrainingAborted("non-finite gradient at step " + std::to_string(state.step_count));
  }
  if (state.velocity.rows() != weights.rows() || state.velocity.cols() != weights.cols()) {
    state.velocity = Matrix::Zero(weights.rows(), weights.cols());
  }
  const Matrix loss_grad = -objective_grad + config.weight_decay * weights;
  state.velocity = config.momentum * state.velocity - state.current_lr * loss_grad;
  weights += state.velocity;
  ++state.step_count;
  if (!weights.allFinite()) {
    throw TrainingAborted("weights became non-finite at step " + std::to_string(state.step_count));
  }
}

BatchStep batch_gradient(const HashModel& model, const Batch& batch) {
  const Matrix activations = forward_linear_batch(model, batch.features);
  const Matrix codes = relax(activations, model.gamma());
  const BatchGradients grads = efficient_jacobian(codes, batch.affinity);
  BatchStep step;
  step.objective = grads.objective;
  step.weight_grad = backprop_to_weights(model, batch.features, grads.jacobian);
  return step;
}

TrainResult train(const AffinityOracle& oracle, const TrainConfig& config,
                  std::optional<HashModel> initial, const ValidationFn& validate) {
  config.validate();
  const Dataset& ds = oracle.dataset();
  const auto& pool = ds.splits.train;
  if (pool.size() < static_cast<std::size_t>(config.batch_size)) {
    throw InvalidConfig("training split has " + std::to_string(pool.size()) +
                        " items, fewer than batch_size " + std::to_string(config.batch_size));
  }
  HashModel model = initial ? std::move(*initial)
                            : HashModel::gaussian(ds.features.dim(), config.code_length,
                                                  config.gamma, config.seed);
  if (model.input_dim() != ds.features.dim()) {
    detail::throw_invalid("model input dimension does not match the dataset");
  }

  // Batch sampling uses its own stream so the initialization does not shift
  // it.
  std::mt19937_64 rng(config.seed ^ 0x9E3779B97F4A7C15ULL);
  const int batches = config.batches_per_epoch > 0
                          ? config.batches_per_epoch
                          : std::max<int>(1, static_cast<int>(pool.size() / config.batch_size));
  OptimizerState state = OptimizerState::for_weights(model.weights(), config.lr);
  Matrix weights = model.weights();

  TrainResult result{model, {}};
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    state.current_lr = scheduled_lr(config, epoch);
    double objective_sum = 0.0;
    for (int k = 0; k < batches; ++k) {
      const Batch batch = sample_minibatch(oracle, pool, config.batch_size, rng, config.balanced_batches);
      const BatchStep step = batch_gradient(model, batch);
      objective_sum += step.objective;
      try {
        sgd_step(weights, step.weight_grad, state, config);
      } catch (const TrainingAborted& e) {
        throw TrainingAborted(std::string(e.what()) + " (epoch " + std::to_string(epoch + 1) +
                              ", batch " + std::to_string(k + 1) + ")");
      }
      model.set_weights(weights);
    }
    EpochLog entry;
    entry.epoch = epoch + 1;
    entry.mean_objective = objective_sum / batches;
    entry.lr = state.current_lr;
    if (validate) entry.val_map = validate(model);
    result.log.push_back(entry);
  }
  result.model = std::move(model);
  return result;
}

void write_train_log(const std::vector<EpochLog>& log, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) detail::throw_invalid("cannot open for writing: " + path.string());
  const bool with_map = !log.empty() && log.front().val_map.has_value();
  out << "epoch,mean_objective,lr" << (with_map ? ",val_map" : "") << '\n';
  char line[128];
  for (const auto& e : log) {
    std::snprintf(line, sizeof(line), "%d,%.17g,%.17g", e.epoch, e.mean_objective, e.lr);
    out << line;
    if (with_map) {
      std::snprintf(line, sizeof(line), ",%.17g", e.val_map.value_or(std::nan("")));
      out << line;
    }
    out << '\n';
  }
}

}  // namespace mihash
