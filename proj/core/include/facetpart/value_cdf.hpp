// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <utility>
#include <vector>

namespace facetpart {

// A distribution over value-quantiles r in [0, 1]. Used by the synthetic
// generator to decide where in a result list the clicked entity sits, and by
// the bound checks as the "true" CDF F.
class ValueCdf {
 public:
  enum class Shape { kLinear, kConcave, kConvex, kPower, kTable };

  static ValueCdf linear();
  // F(r) = 2r - r^2
  static ValueCdf concave();
  // F(r) = r^2
  static ValueCdf convex();
  // F(r) = 1 - (1 - r)^a with a > 0. Concave for a > 1, convex for a < 1.
  static ValueCdf power(double exponent);
  // Piecewise-linear through (r_i, F_i). Must start at (0, 0), end at (1, 1)
  // and be non-decreasing in both coordinates.
  static ValueCdf table(std::vector<std::pair<double, double>> points);

  double operator()(double r) const;
  // Generalized inverse: smallest r with F(r) >= u.
  double inverse(double u) const;

  Shape shape() const noexcept { return shape_; }
  double exponent() const noexcept { return exponent_; }
  const std::vector<std::pair<double, double>>& points() const noexcept {
    return points_;
  }
  std::string name() const;

 private:
  ValueCdf(Shape shape, double exponent,
           std::vector<std::pair<double, double>> points)
      : shape_(shape), exponent_(exponent), points_(std::move(points)) {}

  Shape shape_;
  double exponent_;
  std::vector<std::pair<double, double>> points_;
};

// Parses "linear", "concave", "convex", "power:<a>" or
// "table:r0=f0,r1=f1,...". Throws InvalidArgument on anything else.
ValueCdf parse_value_cdf(const std::string& spec);

}  // namespace facetpart
