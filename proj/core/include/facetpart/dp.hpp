// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "facetpart/log_model.hpp"
#include "facetpart/metric.hpp"

namespace facetpart {

// Sum over entities of p(e) times the refined rank e would have if it were
// the clicked one. `p` is aligned with `entities`.
double expected_rr(std::span<const ValuedEntity> entities,
                   std::span<const double> p, const SeparatorSet& s);

// Exact minimizer of expected_rr over separators drawn from the candidate
// midpoints, using min(k, #distinct values) ranges. Among optimal solutions
// the lexicographically smallest separator list is returned.
SeparatorSet dp_partition(std::span<const ValuedEntity> entities,
                          std::span<const double> p, std::size_t k);

inline constexpr std::size_t kDefaultBruteForceCap = 1'000'000;

// Enumerates every (k-1)-subset of the candidate midpoints. Same optimum and
// tie rule as dp_partition. Throws InvalidArgument when the number of
// subsets exceeds `cap`.
SeparatorSet brute_force_partition(std::span<const ValuedEntity> entities,
                                   std::span<const double> p, std::size_t k,
                                   std::size_t cap = kDefaultBruteForceCap);

// Adds one separator at a time, each time the one that most reduces
// expected_rr (smallest value on ties).
SeparatorSet greedy_partition(std::span<const ValuedEntity> entities,
                              std::span<const double> p, std::size_t k);

// Tolerance used when comparing objective values for tie-breaking.
inline constexpr double kObjectiveTieTolerance = 1e-12;

}  // namespace facetpart
