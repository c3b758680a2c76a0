// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "facetpart/log_model.hpp"

namespace facetpart {

// Estimated first-click probabilities for the entities of an impression.
//
// kMixture: p(e) = lambda * p_q(e) + (1 - lambda) * p_cat(e), where p_q is
// proportional to training clicks on e under the same query and p_cat to
// clicks on e anywhere in the (single-category) training log. A component
// with no mass on the impression contributes nothing; the mixture is then
// renormalized, and an impression with no mass at all gets uniform p.
//
// kRankBased: p(e) proportional to 1 / rank(e).
class ClickModel {
 public:
  enum class Kind { kMixture, kRankBased };

  ClickModel() = default;
  static ClickModel rank_based();

  Kind kind() const noexcept { return kind_; }
  double lambda() const noexcept { return lambda_; }
  const std::map<std::pair<std::string, std::string>, std::size_t>&
  query_counts() const noexcept {
    return query_counts_;
  }
  const std::map<std::string, std::size_t>& category_counts() const noexcept {
    return category_counts_;
  }

  // One probability per valued entity, in rank order. Sums to one.
  std::vector<double> probabilities(const Impression& impression) const;

  bool operator==(const ClickModel&) const = default;

  friend ClickModel fit_click_model(const SearchLog& train, double lambda);
  friend ClickModel load_click_model(std::istream& in);

 private:
  Kind kind_ = Kind::kMixture;
  double lambda_ = 0.5;
  std::map<std::pair<std::string, std::string>, std::size_t> query_counts_;
  std::map<std::string, std::size_t> category_counts_;
};

// Throws InvalidArgument for lambda outside [0, 1] or an empty log.
ClickModel fit_click_model(const SearchLog& train, double lambda);

inline std::vector<double> click_probabilities(const ClickModel& model,
                                               const Impression& impression) {
  return model.probabilities(impression);
}

void save_click_model(std::ostream& out, const ClickModel& model);
void save_click_model(const std::filesystem::path& path,
                      const ClickModel& model);
ClickModel load_click_model(std::istream& in);
ClickModel load_click_model(const std::filesystem::path& path);

}  // namespace facetpart
