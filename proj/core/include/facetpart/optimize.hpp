// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace facetpart {

using Objective = std::function<double(std::span<const double>)>;

struct MinimizeOptions {
  // Convergence: Powell stops when a full sweep improves f by less than
  // tolerance * (|f| + tiny); Nelder-Mead when the simplex diameter and the
  // spread of its function values both fall below tolerance.
  double tolerance = 1e-6;
  std::size_t max_evaluations = 2000;
  double initial_step = 0.5;
};

struct MinimizeResult {
  std::vector<double> x;
  double value = 0.0;
  std::size_t evaluations = 0;
  bool converged = false;
};

// Powell's conjugate direction method with Brent line searches. The result is
// never worse than the starting point.
MinimizeResult minimize_powell(const Objective& f, std::vector<double> x0,
                               const MinimizeOptions& options = {});

// Nelder-Mead downhill simplex (reflection 1, expansion 2, contraction 1/2,
// shrink 1/2). The result is never worse than the starting point.
MinimizeResult minimize_nelder_mead(const Objective& f, std::vector<double> x0,
                                    const MinimizeOptions& options = {});

}  // namespace facetpart
