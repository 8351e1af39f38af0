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

// Command-line driver: train, eval, query, export-codes, synth, plot-dists.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "mihash/config.hpp"
#include "mihash/dataset.hpp"
#include "mihash/embedding.hpp"
#include "mihash/report.hpp"
#include "mihash/retrieval.hpp"
#include "mihash/soft_histogram.hpp"
#include "mihash/trainer.hpp"

namespace fs = std::filesystem;
using namespace mihash;

namespace {

FeatureFormat format_from(const std::string& name, const fs::path& path) {
  if (name == "csv") return FeatureFormat::kCsv;
  if (name == "binary") return FeatureFormat::kBinary;
  return guess_feature_format(path);
}

// Applies the normalization stored next to a model, if any.
void apply_model_standardizer(const fs::path& model_path, FeatureMatrix& features) {
  const fs::path norm = standardizer_path(model_path);
  if (fs::exists(norm)) Standardizer::load(norm).apply(features);
}

RelevanceFn split_relevance(const AffinityOracle& oracle) {
  const auto& splits = oracle.dataset().splits;
  return [&oracle, &splits](std::size_t q, std::size_t i) {
    return oracle.is_neighbor(splits.test[q], splits.retrieval[i]);
  };
}

double split_map(const AffinityOracle& oracle, const HashModel& model) {
  const auto& ds = oracle.dataset();
  return mean_average_precision(encode(model, ds.features.gather(ds.splits.test)),
                                encode(model, ds.features.gather(ds.splits.retrieval)),
                                split_relevance(oracle));
}

struct TrainArgs {
  fs::path config;
  std::optional<fs::path> model_out;
  std::optional<fs::path> log_out;
  bool quiet = false;
};

int run_train(const TrainArgs& args) {
  ExperimentConfig cfg = load_config(args.config);
  if (args.model_out) cfg.model_out = *args.model_out;
  if (args.log_out) cfg.log_out = *args.log_out;
  const PreparedData data = load_experiment_data(cfg);
  const AffinityOracle oracle = build_oracle(data.dataset, cfg.oracle, cfg.oracle_options);
  if (!args.quiet && cfg.oracle == OracleMode::kMetricThreshold) {
    std::fprintf(stderr, "metric oracle: threshold %.6g at percentile %g\n", oracle.threshold_distance(),
                 oracle.percentile());
  }

  ValidationFn validate;
  if (cfg.validate) {
    if (data.dataset->splits.test.empty() || data.dataset->splits.retrieval.empty()) {
      throw InvalidConfig("validate = true needs non-empty test and retrieval splits");
    }
    validate = [&oracle](const HashModel& m) { return split_map(oracle, m); };
  }
  const TrainResult result = train(oracle, cfg.train, std::nullopt, validate);
  if (!args.quiet) {
    for (const auto& e : result.log) {
      std::fprintf(stderr, "epoch %d  objective %.6f  lr %.4g", e.epoch, e.mean_objective, e.lr);
      if (e.val_map) std::fprintf(stderr, "  val_map %.4f", *e.val_map);
      std::fprintf(stderr, "\n");
    }
  }

  save_model(result.model, cfg.model_out);
  const fs::path norm = standardizer_path(cfg.model_out);
  if (data.standardizer) {
    data.standardizer->save(norm);
  } else if (fs::exists(norm)) {
    fs::remove(norm);
  }
  write_train_log(result.log, cfg.log_out);
  if (!args.quiet) std::fprintf(stderr, "wrote %s and %s\n", cfg.model_out.c_str(), cfg.log_out.c_str());
  return 0;
}

struct EvalArgs {
  fs::path config;
  std::optional<fs::path> model;
  std::optional<int> lsh_bits;
  std::uint64_t lsh_seed = 0;
  fs::path report = "report.csv";
  std::vector<int> map_at;
  std::vector<int> precision_at;
  std::optional<fs::path> plot_dists;
  bool exclude_empty = false;
};

int run_eval(const EvalArgs& args) {
  if (args.model.has_value() == args.lsh_bits.has_value()) {
    throw InvalidConfig("eval needs exactly one of --model or --lsh-bits");
  }
  ExperimentConfig cfg = load_config(args.config);
  // A trained model carries its own normalization; the LSH baseline follows
  // the config.
  if (args.model) cfg.standardize = false;
  PreparedData data = load_experiment_data(cfg);
  Dataset& ds = *data.dataset;
  if (ds.splits.test.empty()) throw InvalidConfig("eval needs a non-empty test split");
  if (ds.splits.retrieval.empty()) throw InvalidConfig("eval needs a non-empty retrieval split");

  std::optional<HashModel> model;
  if (args.model) {
    model = load_model(*args.model);
    apply_model_standardizer(*args.model, ds.features);
  } else {
    model = HashModel::gaussian(ds.features.dim(), *args.lsh_bits, 1.0, args.lsh_seed);
  }
  if (model->input_dim() != ds.features.dim()) {
    throw InvalidInput("model expects " + std::to_string(model->input_dim()) + "-d features, dataset has " +
                       std::to_string(ds.features.dim()));
  }
  const AffinityOracle oracle = build_oracle(data.dataset, cfg.oracle, cfg.oracle_options);
  const BinaryCodeSet queries = encode(*model, ds.features.gather(ds.splits.test));
  const BinaryCodeSet db = encode(*model, ds.features.gather(ds.splits.retrieval));
  const RelevanceFn relevant = split_relevance(oracle);

  EvalOptions options;
  options.map_cutoffs = args.map_at;
  options.precision_cutoffs = args.precision_at;
  options.count_empty_queries = !args.exclude_empty;
  const RetrievalReport report = evaluate_retrieval(queries, db, relevant, options);
  write_eval_report(report, args.report);
  std::printf("mAP %.6f over %zu queries\n", report.map, report.scored_queries);
  for (const auto& [k, v] : report.map_at) std::printf("mAP@%d %.6f\n", k, v);
  for (const auto& [k, v] : report.precision_at) std::printf("precision@%d %.6f\n", k, v);

  if (args.plot_dists) {
    const DistanceDistributions dists = distance_distributions(queries, db, relevant);
    fs::path csv = *args.plot_dists, svg = *args.plot_dists;
    csv += ".csv";
    svg += ".svg";
    write_histogram_csv(csv, dists.mean_p_plus, dists.mean_p_minus);
    char title[128];
    std::snprintf(title, sizeof(title), "Hamming distances, b=%d, mAP %.3f, mean MI %.3f nats",
                  model->code_length(), report.map, dists.mean_mi);
    write_text_file(svg, distance_plot_svg(dists.mean_p_plus, dists.mean_p_minus, title));
    std::printf("mean MI %.6f nats, overlap %.6f\n", dists.mean_mi, dists.overlap());
  }
  return 0;
}

struct QueryArgs {
  fs::path model;
  fs::path db;
  fs::path queries;
  std::string format = "auto";
  int k = 10;
};

int run_query(const QueryArgs& args) {
  if (args.k < 1) throw InvalidInput("--k must be >= 1");
  const HashModel model = load_model(args.model);
  const BinaryCodeSet db = load_codes(args.db);
  if (db.code_length() != model.code_length()) {
    throw InvalidInput("database codes have " + std::to_string(db.code_length()) + " bits, model has " +
                       std::to_string(model.code_length()));
  }
  FeatureMatrix features = load_features(args.queries, format_from(args.format, args.queries));
  if (features.dim() != model.input_dim()) {
    throw InvalidInput("model expects " + std::to_string(model.input_dim()) + "-d features, queries are " +
                       std::to_string(features.dim()) + "-d");
  }
  apply_model_standardizer(args.model, features);
  int k = args.k;
  if (static_cast<std::size_t>(k) > db.size()) {
    std::fprintf(stderr, "warning: k=%d exceeds database size %zu; returning %zu results per query\n", k,
                 db.size(), db.size());
    k = static_cast<int>(db.size());
  }
  const BinaryCodeSet codes = encode(model, features.values);
  std::printf("query,rank,index,distance\n");
  for (std::size_t q = 0; q < codes.size(); ++q) {
    const RankedList ranked = rank_database(codes.code(q), db);
    for (int r = 0; r < k; ++r) {
      std::printf("%zu,%d,%u,%d\n", q, r + 1, ranked.ordering[r], ranked.distances[r]);
    }
  }
  return 0;
}

struct ExportArgs {
  fs::path model;
  fs::path features;
  std::string format = "auto";
  fs::path out;
  std::optional<fs::path> csv;
};

int run_export(const ExportArgs& args) {
  const HashModel model = load_model(args.model);
  FeatureMatrix features = load_features(args.features, format_from(args.format, args.features));
  if (features.dim() != model.input_dim()) {
    throw InvalidInput("model expects " + std::to_string(model.input_dim()) + "-d features, file has " +
                       std::to_string(features.dim()) + "-d");
  }
  apply_model_standardizer(args.model, features);
  const BinaryCodeSet codes = encode(model, features.values);
  save_codes(codes, args.out);
  if (args.csv) save_codes_csv(codes, *args.csv);
  std::fprintf(stderr, "wrote %zu %d-bit codes\n", codes.size(), codes.code_length());
  return 0;
}

struct SynthArgs {
  SynthOptions options;
  fs::path out_dir;
  std::string format = "binary";
};

int run_synth(const SynthArgs& args) {
  const Dataset ds = synth_dataset(args.options);
  fs::create_directories(args.out_dir);
  const bool csv = args.format == "csv";
  const std::string features_name = csv ? "features.csv" : "features.mif";
  save_features(ds.features, args.out_dir / features_name, csv ? FeatureFormat::kCsv : FeatureFormat::kBinary);
  save_labels(ds.labels, args.out_dir / "labels.txt");
  save_splits(ds.splits, args.out_dir / "splits.txt");
  write_text_file(args.out_dir / "config.txt",
                  "# Synthetic clusters written by `mihash synth`.\n"
                  "features = " + features_name + "\n"
                  "labels = labels.txt\n"
                  "splits = splits.txt\n"
                  "oracle = single_label\n");
  std::fprintf(stderr, "wrote %zu items (%d-d, %d classes) to %s\n", ds.size(), ds.features.dim(),
               args.options.classes, args.out_dir.c_str());
  return 0;
}

struct PlotArgs {
  fs::path hist;
  fs::path out;
  std::string title = "Hamming distance distributions";
};

int run_plot(const PlotArgs& args) {
  const HistogramTable table = read_histogram_csv(args.hist);
  write_text_file(args.out, distance_plot_svg(table.p_plus, table.p_minus, args.title));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learning binary hash codes by maximizing mutual information"};
  app.require_subcommand(1);

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Train a hash model from a config file");
  train_cmd->add_option("-c,--config", train_args.config, "Experiment config file")->required();
  train_cmd->add_option("--model-out", train_args.model_out, "Override model_out");
  train_cmd->add_option("--log-out", train_args.log_out, "Override log_out");
  train_cmd->add_flag("-q,--quiet", train_args.quiet, "No progress output");

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "Rank the retrieval split against the test split");
  eval_cmd->add_option("-c,--config", eval_args.config, "Experiment config file (dataset and oracle)")->required();
  eval_cmd->add_option("-m,--model", eval_args.model, "Model file");
  eval_cmd->add_option("--lsh-bits", eval_args.lsh_bits, "Evaluate a random-projection baseline instead");
  eval_cmd->add_option("--lsh-seed", eval_args.lsh_seed, "Seed of the baseline projection");
  eval_cmd->add_option("-o,--report", eval_args.report, "CSV report path")->capture_default_str();
  eval_cmd->add_option("--map-at", eval_args.map_at, "Cutoffs K for mAP@K")->delimiter(',');
  eval_cmd->add_option("--precision-at", eval_args.precision_at, "Cutoffs K for precision@K")->delimiter(',');
  eval_cmd->add_option("--plot-dists", eval_args.plot_dists,
                       "Write mean distance distributions to PREFIX.csv and PREFIX.svg");
  eval_cmd->add_flag("--exclude-empty", eval_args.exclude_empty, "Drop queries with no relevant item from the mean");

  QueryArgs query_args;
  auto* query_cmd = app.add_subcommand("query", "Top-k database items for each query vector");
  query_cmd->add_option("-m,--model", query_args.model, "Model file")->required();
  query_cmd->add_option("--db", query_args.db, "Database codes (MIC1)")->required();
  query_cmd->add_option("--queries", query_args.queries, "Query features")->required();
  query_cmd->add_option("--format", query_args.format, "auto, csv or binary")
      ->check(CLI::IsMember({"auto", "csv", "binary"}));
  query_cmd->add_option("-k", query_args.k, "Results per query")->capture_default_str();

  ExportArgs export_args;
  auto* export_cmd = app.add_subcommand("export-codes", "Encode a feature file");
  export_cmd->add_option("-m,--model", export_args.model, "Model file")->required();
  export_cmd->add_option("--features", export_args.features, "Feature file")->required();
  export_cmd->add_option("--format", export_args.format, "auto, csv or binary")
      ->check(CLI::IsMember({"auto", "csv", "binary"}));
  export_cmd->add_option("-o,--out", export_args.out, "Output codes (MIC1)")->required();
  export_cmd->add_option("--csv", export_args.csv, "Also write codes as CSV rows of +-1");

  SynthArgs synth_args;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic Gaussian-cluster dataset");
  synth_cmd->add_option("-o,--out-dir", synth_args.out_dir, "Output directory")->required();
  synth_cmd->add_option("--classes", synth_args.options.classes)->capture_default_str();
  synth_cmd->add_option("--per-class", synth_args.options.per_class)->capture_default_str();
  synth_cmd->add_option("--dim", synth_args.options.dim)->capture_default_str();
  synth_cmd->add_option("--separation", synth_args.options.separation)->capture_default_str();
  synth_cmd->add_option("--test-per-class", synth_args.options.test_per_class)->capture_default_str();
  synth_cmd->add_option("--seed", synth_args.options.seed)->capture_default_str();
  synth_cmd->add_option("--format", synth_args.format, "binary or csv")
      ->check(CLI::IsMember({"binary", "csv"}))
      ->capture_default_str();

  PlotArgs plot_args;
  auto* plot_cmd = app.add_subcommand("plot-dists", "Render a distance-distribution CSV as SVG");
  plot_cmd->add_option("--hist", plot_args.hist, "CSV with columns bin,p_plus,p_minus")->required();
  plot_cmd->add_option("-o,--out", plot_args.out, "SVG path")->required();
  plot_cmd->add_option("--title", plot_args.title);

  CLI11_PARSE(app, argc, argv);

  try {
    if (train_cmd->parsed()) return run_train(train_args);
    if (eval_cmd->parsed()) return run_eval(eval_args);
    if (query_cmd->parsed()) return run_query(query_args);
    if (export_cmd->parsed()) return run_export(export_args);
    if (synth_cmd->parsed()) return run_synth(synth_args);
    if (plot_cmd->parsed()) return run_plot(plot_args);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
