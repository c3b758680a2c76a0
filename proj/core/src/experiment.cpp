// SPDX-License-Identifier: Apache-2.0

#include "facetpart/experiment.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "facetpart/dp.hpp"
#include "facetpart/error.hpp"
#include "facetpart/partition.hpp"
#include "facetpart/stats.hpp"
#include "json_io.hpp"

namespace facetpart {

using nlohmann::json;
using detail::ojson;
using detail::read_opt;

std::string to_string(Method method) {
  switch (method) {
    case Method::kQuantile: return "quantile";
    case Method::kDp: return "dp";
    case Method::kRatio: return "ratio";
    case Method::kTree: return "tree";
    case Method::kGrid: return "grid";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  if (name == "quantile") return Method::kQuantile;
  if (name == "dp") return Method::kDp;
  if (name == "ratio" || name == "powell") return Method::kRatio;
  if (name == "tree") return Method::kTree;
  if (name == "grid") return Method::kGrid;
  throw InvalidArgument("unknown method '" + name + "'");
}

namespace {

bool needs_training(Method m) { return m != Method::kQuantile; }

std::string click_kind_name(ClickModel::Kind k) {
  return k == ClickModel::Kind::kMixture ? "mixture" : "rank_based";
}

ClickModel::Kind parse_click_kind(const std::string& s) {
  if (s == "mixture") return ClickModel::Kind::kMixture;
  if (s == "rank_based" || s == "rank") return ClickModel::Kind::kRankBased;
  throw InvalidArgument("unknown click model kind '" + s + "'");
}

}  // namespace

void ExperimentConfig::validate() const {
  if (k == 0) throw InvalidArgument("k must be at least 1");
  if (method == Method::kGrid && k > kMaxGridK) {
    throw InvalidArgument("grid search is intractable for k > " + std::to_string(kMaxGridK) +
                          "; use ratio or tree");
  }
  if ((method == Method::kRatio || method == Method::kTree || method == Method::kGrid) && k < 2) {
    throw InvalidArgument(to_string(method) + " needs k >= 2");
  }
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw InvalidArgument("lambda must lie in [0, 1]");
  if (!(rounding_precision >= 0.0)) {
    throw InvalidArgument("rounding precision must be non-negative");
  }
  if (optimizer.restarts == 0) throw InvalidArgument("optimizer restarts must be positive");
  if (method == Method::kTree) {
    if (tree.min_leaf == 0) throw InvalidArgument("tree min_leaf must be positive");
    if (prune && tree.cv_folds < 2) throw InvalidArgument("pruning needs at least 2 folds");
  }
}

ExperimentConfig parse_experiment_config(std::istream& in) {
  ExperimentConfig c;
  try {
    const json j = json::parse(in);
    c.method = parse_method(j.at("method").get<std::string>());
    read_opt(j, "k", c.k);
    if (auto it = j.find("click_model"); it != j.end()) {
      if (auto kind = it->find("kind"); kind != it->end()) {
        c.click_kind = parse_click_kind(kind->get<std::string>());
      }
      read_opt(*it, "lambda", c.lambda);
    }
    if (auto it = j.find("optimizer"); it != j.end()) detail::from_json(*it, c.optimizer);
    read_opt(j, "seed", c.optimizer.seed);
    if (auto it = j.find("tree"); it != j.end()) detail::from_json(*it, c.tree);
    read_opt(j, "prune", c.prune);
    read_opt(j, "rounding_precision", c.rounding_precision);
    read_opt(j, "grid_cap", c.grid_cap);
    const auto read_path = [&](const char* key, std::filesystem::path& out) {
      std::string s;
      read_opt(j, key, s);
      if (!s.empty()) out = s;
    };
    read_path("train", c.train_path);
    read_path("test", c.test_path);
    read_path("model_out", c.model_out);
    read_path("model_in", c.model_in);
    read_path("report_out", c.report_out);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed experiment config: ") + e.what());
  }
  c.tree.optimizer = c.optimizer;
  c.validate();
  return c;
}

ExperimentConfig parse_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config '" + path.string() + "'");
  return parse_experiment_config(in);
}

std::string experiment_config_json(const ExperimentConfig& c) {
  ojson j;
  j["method"] = to_string(c.method);
  j["k"] = c.k;
  j["click_model"] = {{"kind", click_kind_name(c.click_kind)}, {"lambda", c.lambda}};
  j["optimizer"] = detail::to_json(c.optimizer);
  ojson tree = detail::to_json(c.tree);
  tree.erase("optimizer");
  j["tree"] = std::move(tree);
  j["prune"] = c.prune;
  j["rounding_precision"] = c.rounding_precision;
  j["grid_cap"] = c.grid_cap;
  j["train"] = c.train_path.string();
  j["test"] = c.test_path.string();
  j["model_out"] = c.model_out.string();
  j["model_in"] = c.model_in.string();
  j["report_out"] = c.report_out.string();
  return j.dump(2);
}

SeparatorSet TrainedPartitioner::operator()(const Impression& impression) const {
  const auto valued = impression.valued();
  SeparatorSet s({}, k);
  if (k > 1) {
    switch (method) {
      case Method::kQuantile:
        s = quantile_partition(valued, k);
        break;
      case Method::kDp:
        s = dp_partition(valued, click_model->probabilities(impression), k);
        break;
      case Method::kRatio:
      case Method::kGrid:
        s = ratio_to_separators(valued, *ratios);
        break;
      case Method::kTree:
        s = ratio_to_separators(valued, tree->predict(extract_features(impression, features)));
        break;
    }
  }
  return rounding_precision > 0.0 ? round_separators(s, rounding_precision) : s;
}

TrainedPartitioner train_partitioner(const ExperimentConfig& config, const SearchLog& train) {
  config.validate();
  TrainedPartitioner p;
  p.method = config.method;
  p.k = config.k;
  p.rounding_precision = config.rounding_precision;
  p.features = config.tree.features;
  if (needs_training(config.method) && train.empty()) {
    throw InvalidArgument(to_string(config.method) + " needs a nonempty training log");
  }
  switch (config.method) {
    case Method::kQuantile:
      break;
    case Method::kDp:
      p.click_model = config.click_kind == ClickModel::Kind::kMixture
                          ? fit_click_model(train, config.lambda)
                          : ClickModel::rank_based();
      break;
    case Method::kRatio: {
      const RatioFit fit = optimize_ratio(cache_cdf(train), config.k, config.optimizer);
      p.ratios = fit.ratios;
      p.evaluations = fit.evaluations;
      p.train_objective = fit.cn;
      break;
    }
    case Method::kGrid: {
      const EmpiricalCdf cdf = cache_cdf(train);
      const GridResult g = grid_search_arr(train, cdf.x_sorted(), config.k, config.grid_cap);
      p.ratios = g.ratios;
      p.evaluations = g.evaluated;
      p.train_objective = g.value;
      break;
    }
    case Method::kTree: {
      TreeConfig tc = config.tree;
      tc.optimizer = config.optimizer;
      RatioTree t = fit_tree(train, config.k, tc);
      if (config.prune) t = prune_tree(t, train);
      p.train_objective = t.weighted_cn();
      p.tree = std::move(t);
      break;
    }
  }
  return p;
}

void save_partitioner(std::ostream& out, const TrainedPartitioner& p) {
  ojson j;
  j["method"] = to_string(p.method);
  j["k"] = p.k;
  j["rounding_precision"] = p.rounding_precision;
  j["features"] = detail::to_json(p.features);
  j["evaluations"] = p.evaluations;
  j["train_objective"] = p.train_objective;
  if (p.ratios) j["ratios"] = p.ratios->values();
  if (p.click_model) {
    std::stringstream ss;
    save_click_model(ss, *p.click_model);
    j["click_model"] = ojson::parse(ss);
  }
  if (p.tree) {
    std::stringstream ss;
    save_tree(ss, *p.tree);
    j["tree"] = ojson::parse(ss);
  }
  out << j.dump(1) << '\n';
}

void save_partitioner(const std::filesystem::path& path, const TrainedPartitioner& p) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  save_partitioner(out, p);
}

TrainedPartitioner load_partitioner(std::istream& in) {
  TrainedPartitioner p;
  try {
    const json j = json::parse(in);
    p.method = parse_method(j.at("method").get<std::string>());
    p.k = j.at("k").get<std::size_t>();
    read_opt(j, "rounding_precision", p.rounding_precision);
    if (auto it = j.find("features"); it != j.end()) detail::from_json(*it, p.features);
    read_opt(j, "evaluations", p.evaluations);
    read_opt(j, "train_objective", p.train_objective);
    if (auto it = j.find("ratios"); it != j.end()) {
      p.ratios = RatioVector(it->get<std::vector<double>>());
    }
    if (auto it = j.find("click_model"); it != j.end()) {
      std::stringstream ss(it->dump());
      p.click_model = load_click_model(ss);
    }
    if (auto it = j.find("tree"); it != j.end()) {
      std::stringstream ss(it->dump());
      p.tree = load_tree(ss);
    }
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed model file: ") + e.what());
  }
  const bool complete = (p.method == Method::kQuantile) ||
                        (p.method == Method::kDp && p.click_model) ||
                        ((p.method == Method::kRatio || p.method == Method::kGrid) && p.ratios) ||
                        (p.method == Method::kTree && p.tree);
  if (!complete) throw InvalidArgument("model file lacks the parameters of its method");
  return p;
}

TrainedPartitioner load_partitioner(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open model '" + path.string() + "'");
  return load_partitioner(in);
}

ExperimentResult run_experiment(const ExperimentConfig& config, const SearchLog& train,
                                const SearchLog& test) {
  ExperimentResult r;
  r.config = config;
  r.partitioner = train_partitioner(config, train);
  r.report = arr_evaluate(test, r.partitioner);
  return r;
}

std::string run_summary_json(const ExperimentResult& r) {
  ojson summary = ojson::parse(report_summary_json(r.report));
  summary["method"] = to_string(r.config.method);
  summary["k"] = r.config.k;
  summary["train_objective"] = r.partitioner.train_objective;
  summary["evaluations"] = r.partitioner.evaluations;
  return summary.dump(2);
}

namespace {

void write_reports(const ExperimentResult& r) {
  const auto& c = r.config;
  if (!c.report_out.empty()) {
    std::ofstream csv(c.report_out.string() + ".csv");
    if (!csv) throw Error("cannot write '" + c.report_out.string() + ".csv'");
    write_report_csv(csv, r.report);
    std::ofstream js(c.report_out.string() + ".json");
    if (!js) throw Error("cannot write '" + c.report_out.string() + ".json'");
    js << run_summary_json(r) << '\n';
  }
  if (!c.model_out.empty()) save_partitioner(c.model_out, r.partitioner);
}

}  // namespace

ExperimentResult cmd_run(const ExperimentConfig& config) {
  config.validate();
  if (config.test_path.empty()) throw InvalidArgument("config names no test log");
  const SearchLog test = parse_log(config.test_path);
  ExperimentResult r;
  r.config = config;
  if (!config.model_in.empty()) {
    r.partitioner = load_partitioner(config.model_in);
    if (r.partitioner.method != config.method || r.partitioner.k != config.k) {
      throw InvalidArgument("model file does not match the configured method and k");
    }
  } else if (needs_training(config.method)) {
    if (config.train_path.empty()) {
      throw InvalidArgument(to_string(config.method) + " needs a training log");
    }
    r.partitioner = train_partitioner(config, parse_log(config.train_path));
  } else {
    r.partitioner = train_partitioner(config, SearchLog());
  }
  r.report = arr_evaluate(test, r.partitioner);
  write_reports(r);
  return r;
}

namespace {

std::vector<std::string> unique_labels(const std::vector<ExperimentConfig>& configs) {
  std::map<std::string, std::size_t> seen;
  std::vector<std::string> out;
  for (const auto& c : configs) {
    const std::string base = to_string(c.method);
    const std::size_t n = seen[base + "/" + std::to_string(c.k)]++;
    out.push_back(n == 0 ? base : base + "#" + std::to_string(n + 1));
  }
  return out;
}

ComparisonTable tabulate(const std::vector<ExperimentConfig>& configs,
                         const std::vector<EvalReport>& reports) {
  ComparisonTable t;
  const auto labels = unique_labels(configs);
  std::vector<std::vector<double>> rr;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    t.rows.push_back({labels[i], configs[i].method, configs[i].k, reports[i].arr, reports[i].n});
    rr.push_back(reports[i].rr_values());
  }
  for (std::size_t a = 0; a < configs.size(); ++a) {
    for (std::size_t b = a + 1; b < configs.size(); ++b) {
      if (configs[a].k != configs[b].k) continue;
      const TTestResult tt = paired_t_test(rr[a], rr[b]);
      t.pairs.push_back({labels[a], labels[b], configs[a].k, tt.p, tt.t});
    }
  }
  return t;
}

}  // namespace

ComparisonTable compare_experiments(const std::vector<ExperimentConfig>& configs,
                                    const SearchLog& train, const SearchLog& test) {
  if (configs.size() < 2) throw InvalidArgument("compare needs at least two configs");
  std::vector<EvalReport> reports;
  for (const auto& c : configs) reports.push_back(run_experiment(c, train, test).report);
  return tabulate(configs, reports);
}

ComparisonTable cmd_compare(const std::vector<ExperimentConfig>& configs) {
  if (configs.size() < 2) throw InvalidArgument("compare needs at least two configs");
  for (const auto& c : configs) {
    if (c.test_path != configs.front().test_path) {
      throw InvalidArgument("all configs must evaluate on the same test log");
    }
  }
  std::vector<EvalReport> reports;
  for (const auto& c : configs) reports.push_back(cmd_run(c).report);
  return tabulate(configs, reports);
}

void write_comparison_csv(std::ostream& out, const ComparisonTable& table) {
  out << "method,k,arr,n\n";
  for (const auto& r : table.rows) {
    out << r.label << ',' << r.k << ',' << format_double(r.arr) << ',' << r.n << '\n';
  }
}

void write_pairs_csv(std::ostream& out, const ComparisonTable& table) {
  out << "a,b,k,p,t\n";
  for (const auto& p : table.pairs) {
    out << p.a << ',' << p.b << ',' << p.k << ',' << format_double(p.p) << ','
        << format_double(p.t) << '\n';
  }
}

}  // namespace facetpart
