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

#include "mihash/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace mihash {

namespace {

struct Entry {
  std::string value;
  std::string where;
};

std::string strip(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

// Drops a trailing comment and unquotes the value.
std::string parse_value(std::string_view raw, const std::string& where) {
  std::string v = strip(raw);
  if (!v.empty() && v.front() == '"') {
    const auto close = v.find('"', 1);
    if (close == std::string::npos) throw InvalidConfig(where + ": unterminated string");
    const std::string rest = strip(std::string_view(v).substr(close + 1));
    if (!rest.empty() && rest.front() != '#') throw InvalidConfig(where + ": text after quoted value");
    return v.substr(1, close - 1);
  }
  const auto hash = v.find('#');
  if (hash != std::string::npos) v = strip(std::string_view(v).substr(0, hash));
  return v;
}

template <typename T>
T parse_number(const Entry& e, const std::string& key) {
  T out{};
  const auto [ptr, ec] = std::from_chars(e.value.data(), e.value.data() + e.value.size(), out);
  if (e.value.empty() || ec != std::errc() || ptr != e.value.data() + e.value.size()) {
    throw InvalidConfig(e.where + ": " + key + " expects a number, got \"" + e.value + "\"");
  }
  return out;
}

bool parse_bool(const Entry& e, const std::string& key) {
  if (e.value == "true") return true;
  if (e.value == "false") return false;
  throw InvalidConfig(e.where + ": " + key + " expects true or false, got \"" + e.value + "\"");
}

using Setter = std::function<void(ExperimentConfig&, const Entry&, const std::filesystem::path&)>;

const std::vector<std::pair<std::string, Setter>>& setters() {
  auto path_of = [](const Entry& e, const std::filesystem::path& base) {
    const std::filesystem::path p(e.value);
    return p.is_absolute() || base.empty() ? p : base / p;
  };
  static const std::vector<std::pair<std::string, Setter>> table = {
      {"features", [=](auto& c, const Entry& e, const auto& base) { c.features = path_of(e, base); }},
      {"features_format",
       [](auto& c, const Entry& e, const auto&) {
         if (e.value != "auto" && e.value != "csv" && e.value != "binary") {
           throw InvalidConfig(e.where + ": features_format must be auto, csv or binary");
         }
         c.features_format = e.value;
       }},
      {"labels", [=](auto& c, const Entry& e, const auto& base) { c.labels = path_of(e, base); }},
      {"splits", [=](auto& c, const Entry& e, const auto& base) { c.splits = path_of(e, base); }},
      {"oracle", [](auto& c, const Entry& e, const auto&) { c.oracle = parse_oracle_mode(e.value); }},
      {"percentile",
       [](auto& c, const Entry& e, const auto&) { c.oracle_options.percentile = parse_number<double>(e, "percentile"); }},
      {"oracle_seed",
       [](auto& c, const Entry& e, const auto&) {
         c.oracle_options.seed = parse_number<std::uint64_t>(e, "oracle_seed");
       }},
      {"oracle_max_pairs",
       [](auto& c, const Entry& e, const auto&) {
         c.oracle_options.max_pairs = parse_number<std::size_t>(e, "oracle_max_pairs");
       }},
      {"standardize", [](auto& c, const Entry& e, const auto&) { c.standardize = parse_bool(e, "standardize"); }},
      {"validate", [](auto& c, const Entry& e, const auto&) { c.validate = parse_bool(e, "validate"); }},
      {"code_length",
       [](auto& c, const Entry& e, const auto&) { c.train.code_length = parse_number<int>(e, "code_length"); }},
      {"batch_size",
       [](auto& c, const Entry& e, const auto&) { c.train.batch_size = parse_number<int>(e, "batch_size"); }},
      {"epochs", [](auto& c, const Entry& e, const auto&) { c.train.epochs = parse_number<int>(e, "epochs"); }},
      {"batches_per_epoch",
       [](auto& c, const Entry& e, const auto&) {
         c.train.batches_per_epoch = parse_number<int>(e, "batches_per_epoch");
       }},
      {"lr", [](auto& c, const Entry& e, const auto&) { c.train.lr = parse_number<double>(e, "lr"); }},
      {"momentum",
       [](auto& c, const Entry& e, const auto&) { c.train.momentum = parse_number<double>(e, "momentum"); }},
      {"weight_decay",
       [](auto& c, const Entry& e, const auto&) { c.train.weight_decay = parse_number<double>(e, "weight_decay"); }},
      {"lr_decay_factor",
       [](auto& c, const Entry& e, const auto&) {
         c.train.lr_decay_factor = parse_number<double>(e, "lr_decay_factor");
       }},
      {"lr_decay_period",
       [](auto& c, const Entry& e, const auto&) {
         c.train.lr_decay_period = parse_number<int>(e, "lr_decay_period");
       }},
      {"gamma", [](auto& c, const Entry& e, const auto&) { c.train.gamma = parse_number<double>(e, "gamma"); }},
      {"seed", [](auto& c, const Entry& e, const auto&) { c.train.seed = parse_number<std::uint64_t>(e, "seed"); }},
      {"balanced_batches",
       [](auto& c, const Entry& e, const auto&) { c.train.balanced_batches = parse_bool(e, "balanced_batches"); }},
      {"model_out", [=](auto& c, const Entry& e, const auto& base) { c.model_out = path_of(e, base); }},
      {"log_out", [=](auto& c, const Entry& e, const auto& base) { c.log_out = path_of(e, base); }},
  };
  return table;
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& [name, fn] : setters()) k.push_back(name);
    return k;
  }();
  return keys;
}

ExperimentConfig parse_config_text(std::string_view text, const std::filesystem::path& base_dir,
                                   const std::string& source) {
  std::map<std::string, Entry> entries;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string where = source + ":" + std::to_string(line_no);
    const std::string body = strip(line);
    if (body.empty() || body.front() == '#') continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw InvalidConfig(where + ": expected key = value");
    const std::string key = strip(std::string_view(body).substr(0, eq));
    if (key.empty()) throw InvalidConfig(where + ": missing key");
    const auto known = std::find(config_keys().begin(), config_keys().end(), key);
    if (known == config_keys().end()) throw InvalidConfig(where + ": unknown key \"" + key + "\"");
    if (entries.count(key)) throw InvalidConfig(where + ": duplicate key \"" + key + "\"");
    entries[key] = Entry{parse_value(std::string_view(body).substr(eq + 1), where), where};
  }

  ExperimentConfig config;
  for (const auto& [name, set] : setters()) {
    const auto it = entries.find(name);
    if (it != entries.end()) set(config, it->second, base_dir);
  }
  if (config.features.empty()) throw InvalidConfig(source + ": missing required key \"features\"");
  config.train.validate();
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidConfig("cannot open config: " + path.string());
  std::stringstream text;
  text << in.rdbuf();
  return parse_config_text(text.str(), path.parent_path(), path.string());
}

PreparedData load_experiment_data(const ExperimentConfig& config) {
  auto ds = std::make_shared<Dataset>();
  const FeatureFormat format = config.features_format == "csv"      ? FeatureFormat::kCsv
                               : config.features_format == "binary" ? FeatureFormat::kBinary
                                                                    : guess_feature_format(config.features);
  ds->features = load_features(config.features, format);
  if (!config.labels.empty()) ds->labels = load_labels(config.labels);
  if (!config.splits.empty()) {
    ds->splits = load_splits(config.splits);
  } else {
    for (std::size_t i = 0; i < ds->size(); ++i) {
      ds->splits.train.push_back(i);
      ds->splits.retrieval.push_back(i);
    }
  }
  try {
    ds->validate();
  } catch (const InvalidInput& e) {
    throw InvalidConfig(std::string("dataset: ") + e.what());
  }
  PreparedData out;
  if (config.standardize) {
    out.standardizer = Standardizer::fit(ds->features, ds->splits.train);
    out.standardizer->apply(ds->features);
  }
  out.dataset = std::move(ds);
  return out;
}

std::filesystem::path standardizer_path(const std::filesystem::path& model_path) {
  auto p = model_path;
  p += ".norm";
  return p;
}

}  // namespace mihash
