// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "facetpart/partition.hpp"
#include "facetpart/value_cdf.hpp"

namespace facetpart {

// Monte-Carlo check of a deviation bound P[sup |C_n - C| > eps] <= bound.
// The supremum is approximated on a grid (plus a local refinement), so the
// observed value is a lower bound on the true supremum; a violation seen here
// is therefore a real violation.
struct BoundReport {
  std::string name;
  std::size_t n = 0;
  std::size_t k = 0;
  double epsilon = 0.0;
  std::size_t trials = 0;
  double observed_exceedance_rate = 0.0;
  double theoretical_bound = 0.0;
  double mc_slack = 0.0;  // 3 binomial standard deviations
  bool applicable = true;
  bool pass = false;
  // Largest sup deviation seen, and per-trial values when requested.
  double max_deviation = 0.0;
  std::vector<double> trial_deviations;
  // Violations of |C_n - C| <= sum_j |F_n(r_j) - F(r_j)| (should stay 0).
  std::size_t decomposition_violations = 0;
};

// C(R) under a true CDF.
double true_cn(const ValueCdf& cdf, const RatioVector& ratios);

// 2 exp(-2 n eps^2 / (k - 1)^2)
double theorem1_bound(std::size_t n, std::size_t k, double epsilon);
// 2 exp(-2 n eps^2), independent of k
double theorem3_bound(std::size_t n, double epsilon);

struct Theorem1Options {
  std::size_t n = 1000;
  std::size_t k = 2;
  double epsilon = 0.1;
  std::size_t trials = 1000;
  std::size_t grid_resolution = 200;
  std::uint64_t seed = 0;
  bool keep_trials = false;
};

BoundReport check_theorem1(const ValueCdf& true_cdf,
                           const Theorem1Options& options);

// True when every second difference of F on the grid is below -delta.
bool is_strongly_concave(const ValueCdf& cdf, std::size_t grid_resolution,
                         double delta = 1e-6);

struct Theorem2Report {
  bool applicable = false;  // F strongly concave on the grid
  bool monotone = false;    // optimal widths non-decreasing
  bool pass = false;        // applicable && monotone
  RatioVector optimum;
  std::vector<double> widths;
  double value = 0.0;
};

// Exhaustive grid minimization of C(R) on {i / resolution}, k <= 4.
Theorem2Report check_theorem2(const ValueCdf& cdf, std::size_t k,
                              std::size_t grid_resolution);

struct Theorem3Options {
  std::size_t n = 1000;
  std::size_t k = 2;
  double epsilon = 0.1;
  std::size_t trials = 1000;
  // L-infinity radius, in ratio units, of the region around R*.
  double neighborhood_radius = 0.05;
  std::size_t grid_resolution = 200;
  std::uint64_t seed = 0;
  bool keep_trials = false;
};

// Supremum restricted to grid points within the radius of R* whose widths
// stay non-decreasing. Reports inapplicable when F is not strongly concave.
BoundReport check_theorem3(const ValueCdf& true_cdf,
                           const Theorem3Options& options);

// |sum x_l y_l| <= sum |x_l| * max |y_l|
bool property1_holds(std::span<const double> x, std::span<const double> y);

std::string bound_report_json(const BoundReport& report);
std::string theorem2_report_json(const Theorem2Report& report);
void write_trial_csv(std::ostream& out, const BoundReport& report);

}  // namespace facetpart
