// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>

namespace facetpart {

struct TTestResult {
  double t = 0.0;
  double p = 1.0;  // two-sided
  std::size_t df = 0;
};

// Paired t-test on a[i] - b[i]. Identical samples give t = 0, p = 1.
// Throws InvalidArgument on length mismatch or fewer than two pairs.
TTestResult paired_t_test(std::span<const double> a, std::span<const double> b);

double mean(std::span<const double> x);
// Sample standard deviation (n - 1 denominator).
double stddev(std::span<const double> x);

}  // namespace facetpart
