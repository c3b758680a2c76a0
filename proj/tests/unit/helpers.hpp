// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "facetpart/log_model.hpp"

namespace facetpart::testing {

// Entities e1..en ranked in list order; `clicked` is a 0-based list index.
inline Impression make_impression(const std::vector<std::optional<double>>& values,
                                  std::size_t clicked, std::string query = "q",
                                  std::int64_t ts = 0,
                                  std::optional<std::vector<double>> features = std::nullopt) {
  std::vector<Entity> es;
  for (std::size_t i = 0; i < values.size(); ++i) {
    es.push_back({"e" + std::to_string(i + 1), values[i], static_cast<int>(i + 1)});
  }
  return Impression(std::move(query), ts, std::move(es), "e" + std::to_string(clicked + 1),
                    std::move(features));
}

inline std::vector<ValuedEntity> ranked(const std::vector<double>& values) {
  std::vector<ValuedEntity> out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    out.push_back({values[i], static_cast<int>(i + 1)});
  }
  return out;
}

// Random valued entities with values drawn from a small integer pool so
// duplicates occur, and ranks shuffled.
inline std::vector<ValuedEntity> random_entities(std::mt19937_64& rng, std::size_t n,
                                                 int value_pool = 8) {
  std::vector<int> ranks(n);
  for (std::size_t i = 0; i < n; ++i) ranks[i] = static_cast<int>(i + 1);
  std::shuffle(ranks.begin(), ranks.end(), rng);
  std::uniform_int_distribution<int> v(1, value_pool);
  std::vector<ValuedEntity> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back({100.0 * v(rng), ranks[i]});
  return out;
}

inline std::vector<double> random_probabilities(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> p(n);
  double s = 0.0;
  for (double& x : p) s += (x = u(rng));
  for (double& x : p) x /= s;
  return p;
}

}  // namespace facetpart::testing
