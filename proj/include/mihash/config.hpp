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

// Experiment configuration: a flat "key = value" text file.
//
// Lines hold one assignment each; '#' starts a comment outside quotes; string
// values may be bare or double-quoted. Relative paths resolve against the
// directory holding the config file. Unknown keys are rejected by name.

#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mihash/dataset.hpp"
#include "mihash/trainer.hpp"

namespace mihash {

struct ExperimentConfig {
  std::filesystem::path features;
  // "auto" picks from the extension.
  std::string features_format = "auto";
  std::filesystem::path labels;  // optional for the metric oracle
  std::filesystem::path splits;  // optional: all items train and retrieve

  OracleMode oracle = OracleMode::kSingleLabel;
  OracleOptions oracle_options;

  // Zero-mean, unit-variance features using training-split statistics.
  bool standardize = false;
  // Log test-vs-retrieval mAP after every epoch.
  bool validate = false;

  TrainConfig train;

  std::filesystem::path model_out = "model.mih";
  std::filesystem::path log_out = "train_log.csv";
};

// Keys accepted by parse_config, in documentation order.
const std::vector<std::string>& config_keys();

ExperimentConfig parse_config_text(std::string_view text, const std::filesystem::path& base_dir,
                                   const std::string& source = "config");
ExperimentConfig load_config(const std::filesystem::path& path);

struct PreparedData {
  std::shared_ptr<Dataset> dataset;
  std::optional<Standardizer> standardizer;
};

// Loads features, labels and splits named by the config and validates them.
// When `standardize` is set, fits the statistics on the training split and
// applies them to every item.
PreparedData load_experiment_data(const ExperimentConfig& config);

// Path of the normalization statistics stored next to a model file.
std::filesystem::path standardizer_path(const std::filesystem::path& model_path);

}  // namespace mihash
