// SPDX-License-Identifier: Apache-2.0

// Command-line front end: gen, split, run, compare, bounds, cdf-curve.

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "facetpart/bounds.hpp"
#include "facetpart/error.hpp"
#include "facetpart/experiment.hpp"
#include "facetpart/log_model.hpp"
#include "facetpart/ratio_opt.hpp"

namespace fp = facetpart;

namespace {

std::uint64_t default_seed() {
  if (const char* s = std::getenv("FACETPART_SEED"); s && *s) {
    try {
      return std::stoull(s);
    } catch (const std::exception&) {
      throw fp::InvalidArgument("FACETPART_SEED must be an unsigned integer");
    }
  }
  return 0;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw fp::Error("cannot write '" + path + "'");
  return out;
}

// Flags shared by `run` and `compare`; each one overrides the config file.
struct RunFlags {
  std::string method;
  std::optional<std::size_t> k;
  std::string train, test, model_out, model_in, report_out;
  std::string click_kind;
  std::optional<double> lambda;
  std::string optimizer;
  std::optional<std::size_t> restarts;
  std::optional<double> tolerance;
  std::optional<std::uint64_t> seed;
  std::string criterion;
  std::optional<std::size_t> min_leaf, max_depth;
  bool quartiles = false;
  bool no_prune = false;
  std::optional<double> rounding;

  void attach(CLI::App* app) {
    app->add_option("--method", method, "quantile | dp | ratio | tree | grid");
    app->add_option("--k", k, "number of ranges");
    app->add_option("--train", train, "training log (JSON lines)");
    app->add_option("--test", test, "test log (JSON lines)");
    app->add_option("--model-out", model_out, "write the trained model here");
    app->add_option("--model-in", model_in, "load a model instead of training");
    app->add_option("--report-out", report_out, "report prefix; writes .csv and .json");
    app->add_option("--click-model", click_kind, "mixture | rank_based (dp only)");
    app->add_option("--lambda", lambda, "query/category mixture weight (dp only)");
    app->add_option("--optimizer", optimizer, "powell | nelder_mead");
    app->add_option("--restarts", restarts, "optimizer restarts");
    app->add_option("--tol", tolerance, "optimizer tolerance");
    app->add_option("--seed", seed, "seed (default: $FACETPART_SEED or 0)");
    app->add_option("--criterion", criterion, "tree split criterion: mse | min_cn");
    app->add_option("--min-leaf", min_leaf, "tree minimum leaf size");
    app->add_option("--max-depth", max_depth, "tree maximum depth");
    app->add_flag("--quartiles", quartiles, "add facet quartile features");
    app->add_flag("--no-prune", no_prune, "skip cost-complexity pruning");
    app->add_option("--rounding", rounding, "round separators to this precision");
  }

  fp::ExperimentConfig apply(fp::ExperimentConfig c, bool from_file) const {
    if (!from_file) c.optimizer.seed = default_seed();
    if (!method.empty()) c.method = fp::parse_method(method);
    if (k) c.k = *k;
    if (!train.empty()) c.train_path = train;
    if (!test.empty()) c.test_path = test;
    if (!model_out.empty()) c.model_out = model_out;
    if (!model_in.empty()) c.model_in = model_in;
    if (!report_out.empty()) c.report_out = report_out;
    if (!click_kind.empty()) {
      if (click_kind == "mixture") {
        c.click_kind = fp::ClickModel::Kind::kMixture;
      } else if (click_kind == "rank_based" || click_kind == "rank") {
        c.click_kind = fp::ClickModel::Kind::kRankBased;
      } else {
        throw fp::InvalidArgument("unknown click model kind '" + click_kind + "'");
      }
    }
    if (lambda) c.lambda = *lambda;
    if (!optimizer.empty()) {
      if (optimizer == "powell") {
        c.optimizer.method = fp::OptimizerMethod::kPowell;
      } else if (optimizer == "nelder_mead" || optimizer == "nelder-mead") {
        c.optimizer.method = fp::OptimizerMethod::kNelderMead;
      } else {
        throw fp::InvalidArgument("unknown optimizer '" + optimizer + "'");
      }
    }
    if (restarts) c.optimizer.restarts = *restarts;
    if (tolerance) c.optimizer.tolerance = *tolerance;
    if (seed) c.optimizer.seed = *seed;
    if (!criterion.empty()) {
      if (criterion == "mse") {
        c.tree.criterion = fp::SplitCriterion::kMse;
      } else if (criterion == "min_cn") {
        c.tree.criterion = fp::SplitCriterion::kMinCn;
      } else {
        throw fp::InvalidArgument("unknown split criterion '" + criterion + "'");
      }
    }
    if (min_leaf) c.tree.min_leaf = *min_leaf;
    if (max_depth) c.tree.max_depth = *max_depth;
    if (quartiles) c.tree.features.quartiles = true;
    if (no_prune) c.prune = false;
    if (rounding) c.rounding_precision = *rounding;
    c.tree.optimizer = c.optimizer;
    c.validate();
    return c;
  }
};

int cmd_gen(const std::string& config_path, std::size_t n, std::size_t entities,
            const std::string& cdf, double bias, std::optional<std::uint64_t> seed,
            const std::string& out) {
  fp::SynthConfig c;
  if (!config_path.empty()) {
    c = fp::parse_synth_config(std::filesystem::path(config_path));
  } else {
    c.seed = default_seed();
    c.n_queries = n;
    c.entities_per_query = {entities, entities};
    c.value_cdf = fp::parse_value_cdf(cdf);
    c.click_position_bias = bias;
  }
  if (seed) c.seed = *seed;
  c.validate();
  const fp::SearchLog log = fp::generate_synthetic(c);
  if (out.empty()) {
    fp::write_log(std::cout, log);
  } else {
    fp::write_log(std::filesystem::path(out), log);
  }
  return 0;
}

int cmd_split(const std::string& in, double fraction, const std::string& train,
              const std::string& test) {
  const fp::TimeSplit s = fp::split_by_time(fp::parse_log(std::filesystem::path(in)), fraction);
  for (const auto& w : s.warnings) std::cerr << "warning: " << w << '\n';
  fp::write_log(std::filesystem::path(train), s.train);
  fp::write_log(std::filesystem::path(test), s.test);
  std::cout << "train " << s.train.size() << ", test " << s.test.size() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical facet range partitioning toolkit"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "generate a synthetic search log");
  std::string gen_config, gen_out, gen_cdf = "linear";
  std::size_t gen_n = 1000, gen_entities = 20;
  double gen_bias = 0.0;
  std::optional<std::uint64_t> gen_seed;
  gen->add_option("--config", gen_config, "generator config (JSON)");
  gen->add_option("--n", gen_n, "number of impressions");
  gen->add_option("--entities", gen_entities, "entities per query");
  gen->add_option("--value-cdf", gen_cdf, "linear | concave | convex | power:a | table:...");
  gen->add_option("--bias", gen_bias, "click position bias exponent");
  gen->add_option("--seed", gen_seed, "seed (default: $FACETPART_SEED or 0)");
  gen->add_option("--out", gen_out, "output log; stdout when omitted");

  // split
  auto* split = app.add_subcommand("split", "split a log by timestamp");
  std::string split_in, split_train, split_test;
  double split_fraction = 0.8;
  split->add_option("--in", split_in, "input log")->required();
  split->add_option("--train-fraction", split_fraction, "fraction of impressions for training");
  split->add_option("--train", split_train, "training log output")->required();
  split->add_option("--test", split_test, "test log output")->required();

  // run
  auto* run = app.add_subcommand("run", "train and evaluate one method");
  std::string run_config;
  RunFlags run_flags;
  run->add_option("--config", run_config, "experiment config (JSON)");
  run_flags.attach(run);

  // compare
  auto* compare = app.add_subcommand("compare", "compare methods with paired t-tests");
  std::vector<std::string> cmp_configs;
  std::vector<std::string> cmp_methods;
  std::string cmp_out, cmp_pairs;
  RunFlags cmp_flags;
  compare->add_option("--config", cmp_configs, "experiment configs (repeatable)");
  compare->add_option("--methods", cmp_methods, "methods to run with shared flags")
      ->delimiter(',');
  compare->add_option("--out", cmp_out, "comparison table CSV; stdout when omitted");
  compare->add_option("--pairs", cmp_pairs, "pairwise t-test CSV; stdout when omitted");
  cmp_flags.attach(compare);

  // bounds
  auto* bounds = app.add_subcommand("bounds", "Monte-Carlo check of the C_n deviation bounds");
  int b_theorem = 1;
  std::string b_cdf = "concave", b_csv;
  std::size_t b_n = 1000, b_k = 2, b_trials = 1000, b_res = 200;
  double b_eps = 0.1, b_radius = 0.05;
  std::optional<std::uint64_t> b_seed;
  bounds->add_option("--theorem", b_theorem, "1, 2 or 3")->check(CLI::IsMember({1, 2, 3}));
  bounds->add_option("--cdf", b_cdf, "true value CDF");
  bounds->add_option("--n", b_n, "samples per trial");
  bounds->add_option("--k", b_k, "number of ranges");
  bounds->add_option("--epsilon", b_eps, "deviation threshold");
  bounds->add_option("--trials", b_trials, "Monte-Carlo trials");
  bounds->add_option("--resolution", b_res, "grid points per unit");
  bounds->add_option("--radius", b_radius, "neighbourhood radius (theorem 3)");
  bounds->add_option("--seed", b_seed, "seed (default: $FACETPART_SEED or 0)");
  bounds->add_option("--trials-csv", b_csv, "write per-trial sup deviations here");

  // cdf-curve
  auto* curve = app.add_subcommand("cdf-curve", "emit F_n or C_n on a grid as CSV");
  std::string c_train, c_out;
  std::size_t c_points = 100;
  bool c_cn = false;
  curve->add_option("--train", c_train, "training log")->required();
  curve->add_option("--points", c_points, "grid intervals on [0, 1]");
  curve->add_flag("--cn", c_cn, "emit C_n(r1) for k = 2 instead of F_n");
  curve->add_option("--out", c_out, "CSV output; stdout when omitted");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*gen) {
      return cmd_gen(gen_config, gen_n, gen_entities, gen_cdf, gen_bias, gen_seed, gen_out);
    }
    if (*split) return cmd_split(split_in, split_fraction, split_train, split_test);
    if (*run) {
      fp::ExperimentConfig base;
      if (!run_config.empty()) base = fp::parse_experiment_config(std::filesystem::path(run_config));
      const auto config = run_flags.apply(base, !run_config.empty());
      const auto result = fp::cmd_run(config);
      std::cout << fp::run_summary_json(result) << '\n';
      return 0;
    }
    if (*compare) {
      std::vector<fp::ExperimentConfig> configs;
      for (const auto& path : cmp_configs) {
        configs.push_back(
            cmp_flags.apply(fp::parse_experiment_config(std::filesystem::path(path)), true));
      }
      for (const auto& m : cmp_methods) {
        RunFlags f = cmp_flags;
        f.method = m;
        fp::ExperimentConfig c = f.apply(fp::ExperimentConfig{}, false);
        c.report_out.clear();
        c.model_out.clear();
        configs.push_back(c);
      }
      const fp::ComparisonTable table = fp::cmd_compare(configs);
      if (cmp_out.empty()) {
        fp::write_comparison_csv(std::cout, table);
      } else {
        auto out = open_out(cmp_out);
        fp::write_comparison_csv(out, table);
      }
      if (cmp_pairs.empty()) {
        fp::write_pairs_csv(std::cout, table);
      } else {
        auto out = open_out(cmp_pairs);
        fp::write_pairs_csv(out, table);
      }
      return 0;
    }
    if (*bounds) {
      const fp::ValueCdf cdf = fp::parse_value_cdf(b_cdf);
      const std::uint64_t seed = b_seed ? *b_seed : default_seed();
      fp::BoundReport report;
      if (b_theorem == 2) {
        std::cout << fp::theorem2_report_json(fp::check_theorem2(cdf, b_k, b_res)) << '\n';
        return 0;
      }
      if (b_theorem == 1) {
        report = fp::check_theorem1(cdf, {b_n, b_k, b_eps, b_trials, b_res, seed, !b_csv.empty()});
      } else {
        report = fp::check_theorem3(
            cdf, {b_n, b_k, b_eps, b_trials, b_radius, b_res, seed, !b_csv.empty()});
      }
      std::cout << fp::bound_report_json(report) << '\n';
      if (!b_csv.empty()) {
        auto out = open_out(b_csv);
        fp::write_trial_csv(out, report);
      }
      return 0;
    }
    if (*curve) {
      if (c_points < 2) throw fp::InvalidArgument("--points must be at least 2");
      const fp::EmpiricalCdf cdf = fp::cache_cdf(fp::parse_log(std::filesystem::path(c_train)));
      std::vector<double> grid;
      for (std::size_t i = 0; i <= c_points; ++i) {
        grid.push_back(static_cast<double>(i) / static_cast<double>(c_points));
      }
      std::ofstream file;
      if (!c_out.empty()) file = open_out(c_out);
      std::ostream& out = c_out.empty() ? std::cout : file;
      if (c_cn) {
        fp::write_cn_curve(out, cdf, grid);
      } else {
        fp::write_cdf_curve(out, cdf, grid);
      }
      return 0;
    }
  } catch (const fp::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
