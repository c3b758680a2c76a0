// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "facetpart/click_model.hpp"
#include "facetpart/log_model.hpp"
#include "facetpart/metric.hpp"
#include "facetpart/ratio_opt.hpp"
#include "facetpart/ratio_tree.hpp"

namespace facetpart {

enum class Method { kQuantile, kDp, kRatio, kTree, kGrid };

std::string to_string(Method method);
Method parse_method(const std::string& name);

struct ExperimentConfig {
  Method method = Method::kQuantile;
  std::size_t k = 2;

  ClickModel::Kind click_kind = ClickModel::Kind::kMixture;
  double lambda = 0.5;

  RatioOptimizerOptions optimizer;

  // Tree growth settings; its optimizer field is replaced by `optimizer`.
  TreeConfig tree;
  bool prune = true;

  // Separators are rounded to this precision when positive.
  double rounding_precision = 0.0;

  std::size_t grid_cap = kDefaultGridCap;

  std::filesystem::path train_path;
  std::filesystem::path test_path;
  std::filesystem::path model_out;
  std::filesystem::path model_in;
  // Reports go to <report_out>.csv and <report_out>.json.
  std::filesystem::path report_out;

  // Throws InvalidArgument when a method-specific requirement is missing,
  // k == 0, or method == kGrid with k > 4.
  void validate() const;
};

ExperimentConfig parse_experiment_config(std::istream& in);
ExperimentConfig parse_experiment_config(const std::filesystem::path& path);
std::string experiment_config_json(const ExperimentConfig& config);

struct TrainedPartitioner {
  Method method = Method::kQuantile;
  std::size_t k = 2;
  double rounding_precision = 0.0;
  FeatureOptions features;
  std::optional<ClickModel> click_model;
  std::optional<RatioVector> ratios;
  std::optional<RatioTree> tree;
  // Objective evaluations spent in training by ratio and grid; zero for the
  // other methods.
  std::size_t evaluations = 0;
  double train_objective = 0.0;  // C_n, or ARR for grid, when applicable

  SeparatorSet operator()(const Impression& impression) const;
};

// Trains on `train` when the method needs it. Quantile never looks at it.
TrainedPartitioner train_partitioner(const ExperimentConfig& config,
                                     const SearchLog& train);

void save_partitioner(std::ostream& out, const TrainedPartitioner& p);
void save_partitioner(const std::filesystem::path& path, const TrainedPartitioner& p);
TrainedPartitioner load_partitioner(std::istream& in);
TrainedPartitioner load_partitioner(const std::filesystem::path& path);

struct ExperimentResult {
  ExperimentConfig config;
  TrainedPartitioner partitioner;
  EvalReport report;
};

ExperimentResult run_experiment(const ExperimentConfig& config,
                                const SearchLog& train, const SearchLog& test);

// {"arr", "n", "method", "k", "train_objective", "evaluations"}
std::string run_summary_json(const ExperimentResult& result);

// Reads the train/test files named in the config, runs, and writes the CSV
// and JSON reports plus the trained model (if model_out is set). With
// model_in set the model is loaded instead of trained. Input files are only
// read.
ExperimentResult cmd_run(const ExperimentConfig& config);

struct MethodRow {
  std::string label;
  Method method = Method::kQuantile;
  std::size_t k = 0;
  double arr = 0.0;
  std::size_t n = 0;
};

struct PairRow {
  std::string a;
  std::string b;
  std::size_t k = 0;
  double p = 1.0;
  double t = 0.0;
};

struct ComparisonTable {
  std::vector<MethodRow> rows;
  std::vector<PairRow> pairs;  // every pair with equal k, paired t-test
};

// Runs every config against the same logs. Throws InvalidArgument when fewer
// than two configs are given.
ComparisonTable compare_experiments(const std::vector<ExperimentConfig>& configs,
                                    const SearchLog& train,
                                    const SearchLog& test);

// File-based variant; all configs must name the same test file.
ComparisonTable cmd_compare(const std::vector<ExperimentConfig>& configs);

void write_comparison_csv(std::ostream& out, const ComparisonTable& table);
void write_pairs_csv(std::ostream& out, const ComparisonTable& table);

}  // namespace facetpart
