// SPDX-License-Identifier: Apache-2.0

#include "facetpart/partition.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "facetpart/error.hpp"

namespace facetpart {

RatioVector::RatioVector(std::vector<double> ratios) : ratios_(std::move(ratios)) {
  for (std::size_t i = 0; i < ratios_.size(); ++i) {
    const double r = ratios_[i];
    if (!(r > 0.0 && r < 1.0)) throw InvalidArgument("ratios must lie in (0, 1)");
    if (i > 0 && !(r > ratios_[i - 1])) {
      throw InvalidArgument("ratios must be strictly increasing");
    }
  }
}

RatioVector RatioVector::quantile(std::size_t k) {
  if (k == 0) throw InvalidArgument("k must be at least 1");
  std::vector<double> r;
  for (std::size_t j = 1; j < k; ++j) {
    r.push_back(static_cast<double>(j) / static_cast<double>(k));
  }
  return RatioVector(std::move(r));
}

RatioVector RatioVector::from_widths(std::span<const double> widths) {
  std::vector<double> r;
  double acc = 0.0;
  for (std::size_t j = 0; j + 1 < widths.size(); ++j) {
    acc += widths[j];
    r.push_back(acc);
  }
  return RatioVector(std::move(r));
}

std::vector<double> RatioVector::widths() const {
  std::vector<double> w;
  w.reserve(ratios_.size() + 1);
  double prev = 0.0;
  for (double r : ratios_) {
    w.push_back(r - prev);
    prev = r;
  }
  w.push_back(1.0 - prev);
  return w;
}

std::vector<double> candidate_midpoints(std::span<const double> values) {
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  std::vector<double> mids;
  if (v.size() < 2) return mids;
  mids.reserve(v.size() - 1);
  for (std::size_t i = 1; i < v.size(); ++i) mids.push_back(std::midpoint(v[i - 1], v[i]));
  return mids;
}

namespace {

std::vector<double> values_of(std::span<const ValuedEntity> entities) {
  std::vector<double> v;
  v.reserve(entities.size());
  for (const auto& e : entities) v.push_back(e.value);
  return v;
}

// Position of a cut after `chosen` sorted elements, and the values on either
// side of it.
struct Boundary {
  std::size_t index = 0;
  double left = 0.0;
  double right = 0.0;
};

// Between distinct-value boundaries lo < c < hi, take the nearer one; ties
// go right so the mapping from c is monotone.
std::size_t snap(std::size_t c, std::size_t lo, std::size_t hi) {
  return (hi - c <= c - lo) ? hi : lo;
}

std::vector<Boundary> boundaries_sorted(std::span<const double> values,
                                        std::span<const std::size_t> cuts) {
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  std::vector<Boundary> out;
  for (std::size_t c : cuts) {
    if (c == 0 || c >= n) continue;
    std::size_t b = c;
    if (sorted[c - 1] == sorted[c]) {
      const double v = sorted[c];
      const auto lo = static_cast<std::size_t>(
          std::lower_bound(sorted.begin(), sorted.end(), v) - sorted.begin());
      const auto hi = static_cast<std::size_t>(
          std::upper_bound(sorted.begin(), sorted.end(), v) - sorted.begin());
      b = snap(c, lo, hi);
    }
    if (b == 0 || b >= n) continue;
    out.push_back({b, sorted[b - 1], sorted[b]});
  }
  return out;
}

std::vector<Boundary> boundaries_selected(std::span<const double> values,
                                          std::span<const std::size_t> cuts) {
  std::vector<double> work(values.begin(), values.end());
  const std::size_t n = work.size();
  std::vector<Boundary> out;
  for (std::size_t c : cuts) {
    if (c == 0 || c >= n) continue;
    // c-th smallest sits at index c-1; its successor is the minimum of the
    // upper partition.
    std::nth_element(work.begin(), work.begin() + static_cast<std::ptrdiff_t>(c - 1),
                     work.end());
    const double a = work[c - 1];
    const double next = *std::min_element(work.begin() + static_cast<std::ptrdiff_t>(c),
                                          work.end());
    if (a < next) {
      out.push_back({c, a, next});
      continue;
    }
    std::size_t lo = 0;
    std::size_t hi = 0;
    double below = 0.0;
    double above = 0.0;
    bool have_below = false;
    bool have_above = false;
    for (double x : work) {
      if (x < a) {
        ++lo;
        if (!have_below || x > below) below = x, have_below = true;
      }
      if (x <= a) ++hi;
      if (x > a && (!have_above || x < above)) above = x, have_above = true;
    }
    const std::size_t b = snap(c, lo, hi);
    if (b == 0 || b >= n) continue;
    out.push_back(b == lo ? Boundary{b, below, a} : Boundary{b, a, above});
  }
  return out;
}

}  // namespace

std::vector<double> candidate_midpoints(std::span<const ValuedEntity> entities) {
  const auto v = values_of(entities);
  return candidate_midpoints(std::span<const double>(v));
}

std::size_t raw_cut_index(double ratio, std::size_t n) {
  // The small slack keeps products like 0.7 * 10 from landing just below an
  // integer.
  const double x = std::floor(ratio * static_cast<double>(n) + 1e-9);
  if (x <= 0.0) return 0;
  return std::min(n, static_cast<std::size_t>(x));
}

SeparatorSet ratio_to_separators(std::span<const double> values,
                                 const RatioVector& ratios, ConversionPath path) {
  if (values.empty()) throw InvalidArgument("no valued entities to partition");
  std::vector<std::size_t> cuts;
  cuts.reserve(ratios.size());
  for (double r : ratios.values()) cuts.push_back(raw_cut_index(r, values.size()));

  if (path == ConversionPath::kAuto) {
    path = values.size() > kSelectionThreshold ? ConversionPath::kSelect
                                               : ConversionPath::kSort;
  }
  const auto bounds = path == ConversionPath::kSort ? boundaries_sorted(values, cuts)
                                                    : boundaries_selected(values, cuts);
  std::vector<double> seps;
  std::size_t last = 0;
  for (const Boundary& b : bounds) {
    if (b.index <= last) continue;  // collapsed onto the previous cut
    last = b.index;
    seps.push_back(std::midpoint(b.left, b.right));
  }
  return SeparatorSet(std::move(seps), ratios.k());
}

SeparatorSet ratio_to_separators(std::span<const ValuedEntity> entities,
                                 const RatioVector& ratios) {
  const auto v = values_of(entities);
  return ratio_to_separators(std::span<const double>(v), ratios);
}

SeparatorSet quantile_partition(std::span<const ValuedEntity> entities, std::size_t k) {
  if (k == 0) throw InvalidArgument("k must be at least 1");
  if (entities.empty()) throw InvalidArgument("no valued entities to partition");
  if (k == 1) return SeparatorSet({}, 1);
  return ratio_to_separators(entities, RatioVector::quantile(k));
}

SeparatorSet round_separators(const SeparatorSet& s, double precision) {
  if (!(precision > 0.0) || !std::isfinite(precision)) {
    throw InvalidArgument("rounding precision must be positive");
  }
  // For decimal precisions (0.1, 0.01, ...) divide by the integer inverse so
  // 149.7 at 0.1 stays the double nearest 149.7.
  const double inverse = std::round(1.0 / precision);
  const bool decimal = precision < 1.0 && std::abs(inverse * precision - 1.0) < 1e-12;
  std::vector<double> out;
  out.reserve(s.size());
  for (double v : s.values()) {
    const double r = decimal ? std::round(v * inverse) / inverse
                             : std::round(v / precision) * precision;
    if (out.empty() || r > out.back()) out.push_back(r);
  }
  return SeparatorSet(std::move(out), s.requested_k());
}

}  // namespace facetpart
