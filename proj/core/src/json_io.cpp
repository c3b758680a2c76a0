// SPDX-License-Identifier: Apache-2.0

#include "json_io.hpp"

#include "facetpart/error.hpp"

namespace facetpart::detail {

std::string optimizer_method_name(OptimizerMethod m) {
  return m == OptimizerMethod::kPowell ? "powell" : "nelder_mead";
}

OptimizerMethod parse_optimizer_method(const std::string& name) {
  if (name == "powell") return OptimizerMethod::kPowell;
  if (name == "nelder_mead" || name == "nelder-mead") return OptimizerMethod::kNelderMead;
  throw InvalidArgument("unknown optimizer '" + name + "'");
}

std::string criterion_name(SplitCriterion c) {
  return c == SplitCriterion::kMinCn ? "min_cn" : "mse";
}

SplitCriterion parse_criterion(const std::string& name) {
  if (name == "min_cn") return SplitCriterion::kMinCn;
  if (name == "mse") return SplitCriterion::kMse;
  throw InvalidArgument("unknown split criterion '" + name + "'");
}

ojson to_json(const RatioOptimizerOptions& o) {
  ojson j;
  j["method"] = optimizer_method_name(o.method);
  j["restarts"] = o.restarts;
  j["tolerance"] = o.tolerance;
  j["max_evaluations"] = o.max_evaluations;
  j["seed"] = o.seed;
  return j;
}

ojson to_json(const FeatureOptions& o) {
  ojson j;
  j["opaque"] = o.opaque;
  j["quartiles"] = o.quartiles;
  return j;
}

ojson to_json(const TreeConfig& c) {
  ojson j;
  j["criterion"] = criterion_name(c.criterion);
  j["min_leaf"] = c.min_leaf;
  j["max_depth"] = c.max_depth;
  j["features"] = to_json(c.features);
  j["optimizer"] = to_json(c.optimizer);
  j["split_restarts"] = c.split_restarts;
  j["max_thresholds"] = c.max_thresholds;
  j["cv_folds"] = c.cv_folds;
  j["se_factor"] = c.se_factor;
  return j;
}

void from_json(const nlohmann::json& j, RatioOptimizerOptions& o) {
  if (auto it = j.find("method"); it != j.end()) {
    o.method = parse_optimizer_method(it->get<std::string>());
  }
  read_opt(j, "restarts", o.restarts);
  read_opt(j, "tolerance", o.tolerance);
  read_opt(j, "max_evaluations", o.max_evaluations);
  read_opt(j, "seed", o.seed);
}

void from_json(const nlohmann::json& j, FeatureOptions& o) {
  read_opt(j, "opaque", o.opaque);
  read_opt(j, "quartiles", o.quartiles);
}

void from_json(const nlohmann::json& j, TreeConfig& c) {
  if (auto it = j.find("criterion"); it != j.end()) {
    c.criterion = parse_criterion(it->get<std::string>());
  }
  read_opt(j, "min_leaf", c.min_leaf);
  read_opt(j, "max_depth", c.max_depth);
  if (auto it = j.find("features"); it != j.end()) from_json(*it, c.features);
  if (auto it = j.find("optimizer"); it != j.end()) from_json(*it, c.optimizer);
  read_opt(j, "split_restarts", c.split_restarts);
  read_opt(j, "max_thresholds", c.max_thresholds);
  read_opt(j, "cv_folds", c.cv_folds);
  read_opt(j, "se_factor", c.se_factor);
}

}  // namespace facetpart::detail
