// SPDX-License-Identifier: Apache-2.0

// JSON mappings for option structs shared by the tree and experiment files.
// Missing keys keep their defaults; unknown enum names throw InvalidArgument.

#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "facetpart/ratio_opt.hpp"
#include "facetpart/ratio_tree.hpp"

namespace facetpart::detail {

using ojson = nlohmann::ordered_json;

std::string optimizer_method_name(OptimizerMethod m);
OptimizerMethod parse_optimizer_method(const std::string& name);
std::string criterion_name(SplitCriterion c);
SplitCriterion parse_criterion(const std::string& name);

ojson to_json(const RatioOptimizerOptions& o);
ojson to_json(const FeatureOptions& o);
ojson to_json(const TreeConfig& c);

void from_json(const nlohmann::json& j, RatioOptimizerOptions& o);
void from_json(const nlohmann::json& j, FeatureOptions& o);
void from_json(const nlohmann::json& j, TreeConfig& c);

// Reads j[key] into `out` when present.
template <typename T>
void read_opt(const nlohmann::json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end() && !it->is_null()) out = it->get<T>();
}

}  // namespace facetpart::detail
