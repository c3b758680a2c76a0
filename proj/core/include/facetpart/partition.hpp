// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "facetpart/log_model.hpp"
#include "facetpart/metric.hpp"

namespace facetpart {

// Relative-ratio form of a separator set: r_1 < ... < r_{k-1} in (0, 1),
// with implicit r_0 = 0 and r_k = 1.
class RatioVector {
 public:
  RatioVector() = default;
  // Throws InvalidArgument unless strictly increasing inside (0, 1).
  explicit RatioVector(std::vector<double> ratios);

  // (1/k, 2/k, ..., (k-1)/k)
  static RatioVector quantile(std::size_t k);
  // Cumulative sums of k positive widths summing to 1. The last width only
  // fixes k; its value is implied by the others.
  static RatioVector from_widths(std::span<const double> widths);

  const std::vector<double>& values() const noexcept { return ratios_; }
  std::size_t size() const noexcept { return ratios_.size(); }
  std::size_t k() const noexcept { return ratios_.size() + 1; }
  double operator[](std::size_t i) const { return ratios_[i]; }

  // Delta r_j for j = 1..k; sums to one.
  std::vector<double> widths() const;

  bool operator==(const RatioVector&) const = default;

 private:
  std::vector<double> ratios_;
};

// Midpoints between consecutive distinct sorted values.
std::vector<double> candidate_midpoints(std::span<const ValuedEntity> entities);
std::vector<double> candidate_midpoints(std::span<const double> values);

// Equi-depth binning. Equivalent to ratio_to_separators with the quantile
// ratio vector; result.reduced() flags when duplicates made k infeasible.
SeparatorSet quantile_partition(std::span<const ValuedEntity> entities,
                                std::size_t k);

// Cut after the floor(r_j * |E|)-th smallest value, snapping to the nearest
// boundary between distinct values (ties go right). Cuts that land on either
// end or coincide with another cut are dropped.
SeparatorSet ratio_to_separators(std::span<const ValuedEntity> entities,
                                 const RatioVector& ratios);

enum class ConversionPath { kAuto, kSort, kSelect };

// Same contract as above with the order-statistics strategy pinned. kAuto
// sorts small lists and uses selection above kSelectionThreshold.
SeparatorSet ratio_to_separators(std::span<const double> values,
                                 const RatioVector& ratios,
                                 ConversionPath path = ConversionPath::kAuto);

inline constexpr std::size_t kSelectionThreshold = 256;

// Number of entities placed below the j-th cut, before snapping.
std::size_t raw_cut_index(double ratio, std::size_t n);

// Rounds each separator to the nearest multiple of `precision` (half away
// from zero) and collapses duplicates.
SeparatorSet round_separators(const SeparatorSet& s, double precision);

}  // namespace facetpart
