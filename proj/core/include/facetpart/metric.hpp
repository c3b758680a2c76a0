// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "facetpart/log_model.hpp"

namespace facetpart {

// k-1 strictly increasing separating values. Range j is the half-open
// interval [s_{j-1}, s_j) with s_0 = -inf and s_k = +inf, so a value equal to
// a separator belongs to the range on its right.
class SeparatorSet {
 public:
  SeparatorSet() = default;
  // Throws InvalidArgument unless `values` is strictly increasing and finite.
  // `requested_k` records how many ranges the caller asked for; it may exceed
  // size() + 1 when duplicates made that many ranges infeasible.
  explicit SeparatorSet(std::vector<double> values, std::size_t requested_k = 0);

  const std::vector<double>& values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }
  double operator[](std::size_t i) const { return values_[i]; }

  std::size_t range_count() const noexcept { return values_.size() + 1; }
  std::size_t requested_k() const noexcept { return requested_k_; }
  // True when fewer ranges were produced than requested.
  bool reduced() const noexcept { return range_count() < requested_k_; }

  // Index of the range containing `value`, in [0, range_count()).
  std::size_t range_of(double value) const;

  SeparatorSet with(double extra) const;

  bool operator==(const SeparatorSet&) const = default;

 private:
  std::vector<double> values_;
  std::size_t requested_k_ = 1;
};

// Rank of the clicked entity among the valued entities of its range, keeping
// the original rank order. Throws ValidationError if the clicked entity has no
// value.
std::size_t refined_rank(const Impression& impression, const SeparatorSet& s);

// Same quantity over a bare valued-entity list; `clicked` indexes `entities`.
std::size_t refined_rank(std::span<const ValuedEntity> entities,
                         std::size_t clicked, const SeparatorSet& s);

struct ImpressionResult {
  std::string query_id;
  std::size_t rr = 0;
};

struct EvalReport {
  double arr = 0.0;
  std::vector<ImpressionResult> per_impression;
  std::size_t n = 0;

  std::vector<double> rr_values() const;
};

using Partitioner = std::function<SeparatorSet(const Impression&)>;

// Averaged refined rank over the log. Errors are rethrown as ValidationError
// carrying the offending query id.
EvalReport arr_evaluate(const SearchLog& log, const Partitioner& partitioner);

void write_report_csv(std::ostream& out, const EvalReport& report);
// {"arr": ..., "n": ...} plus any caller-supplied key/value pairs.
std::string report_summary_json(
    const EvalReport& report,
    const std::vector<std::pair<std::string, std::string>>& extra = {});

// Shortest round-trippable decimal form used by every text emitter.
std::string format_double(double value);

}  // namespace facetpart
